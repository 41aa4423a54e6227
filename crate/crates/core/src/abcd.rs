//! Four-qubit states split as `|0⟩|φ₀⟩ + |1⟩|φ₁⟩` at one qubit, and the
//! test for the irreducible form in which no local operator can move either
//! half out of the W class at any split.
//!
//! When both halves are W-class, local operators on the other three qubits
//! bring the `|1⟩` half to `|001⟩+|010⟩+|100⟩`; an operator on the split
//! qubit then clears the `|001⟩` amplitude of the `|0⟩` half and, when its
//! `|000⟩` amplitude is nonzero, rescales it to −1. The eight amplitudes of
//! the resulting `|0⟩` half are the normal form `c₁..c₈`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Poly, ONE, ZERO};
use crate::slocc::{classify3_raw, pencil_double_root, Kind3};
use crate::state::{self, coeff_matrices_raw, join_raw, split_raw, Ilo, PureState};

pub const TOL_FAMILY: f64 = 1e-9;
/// Normal-form operators worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e8;
const ZERO_HALF: f64 = 1e-14;

/// `w₀|0⟩|φ₀⟩ + w₁|1⟩|φ₁⟩` at `partition_qubit`; a vanishing half has
/// weight zero and no state.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdForm {
    pub partition_qubit: usize,
    pub phi0: Option<PureState>,
    pub phi1: Option<PureState>,
    pub weights: [C64; 2],
}

impl AbcdForm {
    pub fn reassemble(&self) -> Vec<C64> {
        let half = |phi: &Option<PureState>, w: C64| match phi {
            Some(p) => p.amps().iter().map(|z| z * w).collect(),
            None => vec![ZERO; 8],
        };
        join_raw(&half(&self.phi0, self.weights[0]), &half(&self.phi1, self.weights[1]), 4, self.partition_qubit)
            .expect("four-qubit split")
    }
}

pub fn abcd_split(state: &PureState, partition_qubit: usize) -> Result<AbcdForm> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch(format!("A|BCD split needs 4 qubits, got {}", state.n_qubits())));
    }
    let (h0, h1) = split_raw(state.amps(), 4, partition_qubit)?;
    let part = |h: Vec<C64>| -> Result<(Option<PureState>, C64)> {
        let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= ZERO_HALF {
            Ok((None, ZERO))
        } else {
            Ok((Some(state::normalize(h)?), C64::new(norm, 0.0)))
        }
    };
    let (phi0, w0) = part(h0)?;
    let (phi1, w1) = part(h1)?;
    Ok(AbcdForm { partition_qubit, phi0, phi1, weights: [w0, w1] })
}

/// Amplitudes `c₁..c₈` (stored as `c[0]..c[7]`) of the normalized `|0⟩`
/// half; `C0 = [[c₁, c₂], [c₃, c₄]]`, `C1 = [[c₅, c₆], [c₇, c₈]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WNormalForm {
    pub c: [C64; 8],
}

impl WNormalForm {
    /// Coefficient `c_k`, one-based.
    pub fn get(&self, k: usize) -> C64 {
        self.c[k - 1]
    }

    fn scale(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Case1,
    Case2,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictFamily {
    Case1,
    Case2,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub partition_qubit: usize,
    pub ilo: Ilo,
    pub lambda_star: C64,
    pub escaped_class: Kind3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrreducibilityVerdict {
    pub irreducible: bool,
    pub family: VerdictFamily,
    pub witness: Option<Witness>,
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= TOL_FAMILY * scale.max(a.norm()).max(b.norm())
}

/// `Some(+1)` or `Some(-1)` when `c₄ = (√c₆ ± √c₇)²` holds for that sign.
pub fn case1_sign(nf: &WNormalForm) -> Option<f64> {
    let scale = nf.scale();
    let (s, t) = (nf.get(6).sqrt(), nf.get(7).sqrt());
    [1.0, -1.0].into_iter().find(|&sign| close(nf.get(4), (s + sign * t).powi(2), scale))
}

pub fn check_family(nf: &WNormalForm) -> Family {
    let scale = nf.scale();
    let zero = |k: usize| nf.get(k).norm() <= TOL_FAMILY * scale;
    if zero(2) && zero(8) && !zero(4) && !zero(6) && !zero(7) {
        if zero(1) && zero(3) && zero(5) && case1_sign(nf).is_some() {
            return Family::Case1;
        }
        let (c3, c5) = (nf.get(3), nf.get(5));
        if close(nf.get(1), -ONE, 1.0)
            && close(nf.get(4), (c3 / 2.0).powi(2), scale)
            && close(nf.get(6), (c5 / 2.0).powi(2), scale)
            && close(nf.get(7), ((c3 - c5) / 2.0).powi(2), scale)
        {
            return Family::Case2;
        }
    }
    Family::Neither
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn diag(a: C64, b: C64) -> Mat2 {
    [[a, ZERO], [ZERO, b]]
}

fn apply3(phi: &[C64], ops: &[Mat2; 3]) -> Vec<C64> {
    let mut v = phi.to_vec();
    for (k, m) in ops.iter().enumerate() {
        v = state::apply_matrix_raw(&v, 3, k + 1, m).expect("three-qubit vector");
    }
    v
}

fn check_conditioning(ms: &[Mat2]) -> Result<()> {
    for m in ms {
        let k = linalg::condition_number(m);
        if !(k <= MAX_CONDITION) {
            return Err(Error::Degenerate(format!("normal-form operator has condition number {k:.3e}")));
        }
    }
    Ok(())
}

/// Operators `[g₁, g₂, g₃]` with `(g₁⊗g₂⊗g₃)φ = |001⟩+|010⟩+|100⟩` for a
/// W-class vector `φ`.
pub fn w_normal_form_ops(phi: &[C64]) -> Result<[Mat2; 3]> {
    let p = coeff_matrices_raw(phi, 1)?;
    let (x, y) = pencil_double_root(&p.c0, &p.c1);
    // new |1⟩ half: x·C0 + y·C1, singular at the double root
    let rank_one = linalg::add(&linalg::scale(&p.c0, x), &linalg::scale(&p.c1, y));
    let mut g1 = [[y.conj(), -x.conj()], [x, y]];
    let n0 = linalg::add(&linalg::scale(&p.c0, y.conj()), &linalg::scale(&p.c1, -x.conj()));
    let (r, s) = linalg::rank_one_factors(&rank_one);
    if r[0].norm().max(r[1].norm()) == 0.0 {
        return Err(Error::Degenerate("pencil has no rank-one member".into()));
    }
    let mut g2 = linalg::map_to_e0(&r);
    let mut g3 = linalg::map_to_e0(&s);
    let n = linalg::mul(&linalg::mul(&g2, &n0), &transpose(&g3));
    g1 = linalg::mul(&[[ONE, -n[0][0]], [ZERO, ONE]], &g1);
    let (n10, n01) = (n[1][0], n[0][1]);
    if n10.norm() == 0.0 || n01.norm() == 0.0 {
        return Err(Error::Degenerate("state is not in the W class".into()));
    }
    g2 = linalg::mul(&diag(ONE, ONE / n10), &g2);
    g3 = linalg::mul(&diag(ONE, ONE / n01), &g3);
    check_conditioning(&[g1, g2, g3])?;
    let ops = [g1, g2, g3];
    let w = state::named::w3_raw();
    let out = apply3(phi, &ops);
    let err = out.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if err > 1e-7 {
        return Err(Error::Degenerate(format!("W normal form residual {err:.3e}")));
    }
    Ok(ops)
}

/// A four-qubit state brought to `κ(|0⟩|φ_w⟩ + |1⟩|W⟩)` by `ops`, with the
/// split qubit first and the others in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormReduction {
    pub partition_qubit: usize,
    pub others: [usize; 3],
    pub nf: WNormalForm,
    /// One operator per qubit, split qubit first.
    pub ops: Vec<Ilo>,
}

impl NormalFormReduction {
    /// Raw normal-form vector in the order (split qubit, others).
    pub fn normal_form_state(&self) -> Vec<C64> {
        let mut v = self.nf.c.to_vec();
        v.extend(state::named::w3_raw());
        v
    }
}

pub fn others_of(partition_qubit: usize) -> [usize; 3] {
    let v: Vec<usize> = (1..=4).filter(|&q| q != partition_qubit).collect();
    [v[0], v[1], v[2]]
}

/// Normal form at `partition_qubit`; both halves must be W-class.
pub fn reduce_to_normal_form(state: &PureState, partition_qubit: usize) -> Result<NormalFormReduction> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch("normal form needs 4 qubits".into()));
    }
    let (h0, h1) = split_raw(state.amps(), 4, partition_qubit)?;
    let ops3 = w_normal_form_ops(&h1)?;
    let mut phi = apply3(&h0, &ops3);
    let w = state::named::w3_raw();

    let c2 = phi[1];
    let mut a_op: Mat2 = [[ONE, -c2], [ZERO, ONE]];
    for (p, wv) in phi.iter_mut().zip(&w) {
        *p -= c2 * wv;
    }
    phi[1] = ZERO;

    let scale = phi.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let c1 = phi[0];
    if c1.norm() > TOL_FAMILY * scale {
        let f = -ONE / c1;
        phi.iter_mut().for_each(|z| *z *= f);
        phi[0] = -ONE;
        a_op = linalg::mul(&diag(f, ONE), &a_op);
    }
    check_conditioning(&[a_op])?;

    let others = others_of(partition_qubit);
    let mut ops = vec![Ilo::new(partition_qubit, a_op)?];
    for (k, m) in ops3.iter().enumerate() {
        ops.push(Ilo::new(others[k], *m)?);
    }
    let c: [C64; 8] = phi.try_into().expect("eight amplitudes");
    Ok(NormalFormReduction { partition_qubit, others, nf: WNormalForm { c }, ops })
}

/// `Det(base + λ·dir)` as a polynomial in λ, where `Det` is the
/// three-qubit hyperdeterminant.
pub fn hyperdeterminant_pencil(base: &[C64], dir: &[C64]) -> Poly {
    let e: Vec<Poly> = base.iter().zip(dir).map(|(b, d)| Poly::linear(*b, *d)).collect();
    // C0 = [[e0, e1], [e2, e3]], C1 = [[e4, e5], [e6, e7]]
    let tr = e[3].mul(&e[4]).sub(&e[1].mul(&e[6])).sub(&e[2].mul(&e[5])).add(&e[0].mul(&e[7]));
    let det0 = e[0].mul(&e[3]).sub(&e[1].mul(&e[2]));
    let det1 = e[4].mul(&e[7]).sub(&e[5].mul(&e[6]));
    tr.mul(&tr).sub(&det0.mul(&det1).scale(C64::new(4.0, 0.0)))
}

/// `Det(φ_w + λ·W)`; quadratic when `c₈ = 0`. The half stays in the W class
/// exactly at its roots.
pub fn lambda_polynomial(nf: &WNormalForm) -> Poly {
    hyperdeterminant_pencil(&nf.c, &state::named::w3_raw())
}

/// Roots of `Det(φ_w + λ·GHZ)`, a quartic with leading coefficient
/// `Det(GHZ) = 1` for the unnormalized `|000⟩+|111⟩`.
pub fn quartic_lambda_roots(phi_w: &PureState) -> Result<Vec<C64>> {
    if phi_w.n_qubits() != 3 {
        return Err(Error::DimensionMismatch("quartic roots need a three-qubit state".into()));
    }
    let p = hyperdeterminant_pencil(phi_w.amps(), &state::named::ghz3_raw());
    if p.max_coeff() <= 1e-14 {
        return Err(Error::DegeneratePolynomial);
    }
    Ok(p.roots(1e-12))
}

/// A real value strictly larger in modulus than every root.
pub fn root_avoiding(roots: &[C64]) -> C64 {
    C64::new(1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0)
}

fn half_class(h: &[C64]) -> Result<Option<Kind3>> {
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= ZERO_HALF {
        return Ok(None);
    }
    Ok(Some(classify3_raw(h)?.kind))
}

/// Class of the first half that left the W class (a vanishing half counts
/// as a product).
fn escaped(state: &PureState, op: &Ilo) -> Result<Option<Kind3>> {
    let moved = state::apply_matrix_raw(state.amps(), 4, op.qubit, &op.m)?;
    let (h0, h1) = split_raw(&moved, 4, op.qubit)?;
    for h in [h0, h1] {
        match half_class(&h)? {
            None => return Ok(Some(Kind3::Product)),
            Some(Kind3::W) => {}
            Some(k) => return Ok(Some(k)),
        }
    }
    Ok(None)
}

/// A split-qubit operator `[[1, λ₁], [1, λ₂]]` applied after the normal-form
/// operator, with λ₁ = λ* and λ₂ = λ* + 1 both off the roots of the
/// λ-polynomial, so that neither half stays W-class.
fn find_witness(state: &PureState, red: &NormalFormReduction) -> Result<Option<Witness>> {
    let p = lambda_polynomial(&red.nf);
    let scale = red.nf.scale();
    if p.max_coeff() <= TOL_FAMILY * scale.powi(4) {
        return Ok(None);
    }
    let lambda = root_avoiding(&p.roots(1e-12));
    let mix: Mat2 = [[ONE, lambda], [ONE, lambda + ONE]];
    let m = linalg::mul(&mix, &red.ops[0].m);
    let ilo = Ilo::new(red.partition_qubit, m)?;
    Ok(escaped(state, &ilo)?.map(|escaped_class| Witness {
        partition_qubit: red.partition_qubit,
        ilo,
        lambda_star: lambda,
        escaped_class,
    }))
}

pub fn is_irreducible(state: &PureState) -> Result<IrreducibilityVerdict> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch(format!("irreducibility needs 4 qubits, got {}", state.n_qubits())));
    }
    let mut first_family = VerdictFamily::NotApplicable;
    let mut unresolved = false;
    for a in 1..=4 {
        let identity = Ilo::identity(a);
        if let Some(escaped_class) = escaped(state, &identity)? {
            let witness = Witness { partition_qubit: a, ilo: identity, lambda_star: ZERO, escaped_class };
            return Ok(IrreducibilityVerdict {
                irreducible: false,
                family: VerdictFamily::NotApplicable,
                witness: Some(witness),
            });
        }
        let red = reduce_to_normal_form(state, a)?;
        match check_family(&red.nf) {
            Family::Neither => match find_witness(state, &red)? {
                Some(w) => {
                    return Ok(IrreducibilityVerdict {
                        irreducible: false,
                        family: VerdictFamily::NotApplicable,
                        witness: Some(w),
                    })
                }
                None => unresolved = true,
            },
            f => {
                if a == 1 {
                    first_family = if f == Family::Case1 { VerdictFamily::Case1 } else { VerdictFamily::Case2 };
                }
            }
        }
    }
    if unresolved {
        return Err(Error::WitnessMissing);
    }
    Ok(IrreducibilityVerdict { irreducible: true, family: first_family, witness: None })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    /// `c₄ = (√c₆ + sign·√c₇)²` with `sign = +1` when `upper`.
    Case1 {
        c6: C64,
        c7: C64,
        upper: bool,
    },
    Case2 {
        c3: C64,
        c5: C64,
    },
}

/// Normal-form coefficients completed from the family parameters.
pub fn family_normal_form(params: FamilyParams) -> Result<WNormalForm> {
    let tiny = |z: C64| z.norm() <= 1e-12;
    let mut c = [ZERO; 8];
    match params {
        FamilyParams::Case1 { c6, c7, upper } => {
            let sign = if upper { 1.0 } else { -1.0 };
            let c4 = (c6.sqrt() + sign * c7.sqrt()).powi(2);
            if tiny(c6) || tiny(c7) || tiny(c4) {
                return Err(Error::BadParams("case 1 needs c4, c6, c7 nonzero".into()));
            }
            c[3] = c4;
            c[5] = c6;
            c[6] = c7;
        }
        FamilyParams::Case2 { c3, c5 } => {
            if tiny(c3) || tiny(c5) || tiny(c3 - c5) {
                return Err(Error::BadParams("case 2 needs c3, c5 nonzero and distinct".into()));
            }
            c[0] = -ONE;
            c[2] = c3;
            c[3] = (c3 / 2.0).powi(2);
            c[4] = c5;
            c[5] = (c5 / 2.0).powi(2);
            c[6] = ((c3 - c5) / 2.0).powi(2);
        }
    }
    Ok(WNormalForm { c })
}

/// `|0⟩|φ_w⟩ + |1⟩|W⟩`, normalized.
pub fn build_family_state(params: FamilyParams) -> Result<PureState> {
    let nf = family_normal_form(params)?;
    let mut v = nf.c.to_vec();
    v.extend(state::named::w3_raw());
    state::normalize(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{named, random_ilo};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn nf(vals: [f64; 8]) -> WNormalForm {
        WNormalForm { c: vals.map(c) }
    }

    #[test]
    fn split_examples() {
        let f = abcd_split(&named::psi4(), 1).unwrap();
        let w0 = PureState::from_real(&[0.0, 0.0, 0.0, -2.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let w1 = PureState::from_real(&[0.0, 1.0, 1.0, 0.0, -2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(state::overlap2(f.phi0.as_ref().unwrap(), &w0).unwrap() > 1.0 - 1e-14);
        assert!(state::overlap2(f.phi1.as_ref().unwrap(), &w1).unwrap() > 1.0 - 1e-14);
        assert!((f.weights[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        let back = f.reassemble();
        assert!(back.iter().zip(named::psi4().amps()).all(|(a, b)| (a - b).norm() < 1e-14));

        let z = abcd_split(
            &PureState::from_real(&[1.0; 1].iter().chain([0.0; 15].iter()).copied().collect::<Vec<_>>()).unwrap(),
            3,
        )
        .unwrap();
        assert!(z.phi1.is_none());
        assert_eq!(z.weights[1], ZERO);
    }

    #[test]
    fn family_examples() {
        assert_eq!(check_family(&nf([0.0, 0.0, 0.0, 4.0, 0.0, 1.0, 1.0, 0.0])), Family::Case1);
        assert_eq!(check_family(&nf([-1.0, 0.0, 2.0, 1.0, 4.0, 4.0, 1.0, 0.0])), Family::Case2);
        assert_eq!(check_family(&nf([0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0])), Family::Neither);
    }

    #[test]
    fn w_normal_form_maps_images_of_w() {
        for seed in 0..30u64 {
            let ops: Vec<Ilo> = (1..=3).map(|q| random_ilo(q, 100 + seed * 3 + q as u64)).collect();
            let phi = state::apply_ilos(&named::w3(), &ops).unwrap();
            let m = w_normal_form_ops(phi.amps()).unwrap();
            let out = apply3(phi.amps(), &m);
            let w = named::w3_raw();
            assert!(out.iter().zip(&w).all(|(a, b)| (a - b).norm() < 1e-9));
        }
    }

    #[test]
    fn lambda_polynomial_constant_term() {
        let n = nf([0.3, 0.0, -1.2, 2.0, 0.7, 1.1, -0.4, 0.0]);
        let p = lambda_polynomial(&n);
        let g = |k: usize| n.get(k);
        let a0 = (g(4) * g(5) - g(3) * g(6)).powi(2) + 4.0 * g(1) * g(4) * g(6) * g(7);
        assert!((p.0[0] - a0).norm() < 1e-12);
        assert!(p.0.iter().skip(3).all(|z| z.norm() < 1e-12), "c8 = 0 makes it quadratic");
    }

    #[test]
    fn psi4_is_irreducible_and_dicke_is_not() {
        let v = is_irreducible(&named::psi4()).unwrap();
        assert!(v.irreducible, "{v:?}");
        assert_eq!(v.family, VerdictFamily::Case1);

        let v = is_irreducible(&named::dicke2()).unwrap();
        assert!(!v.irreducible);
        let w = v.witness.unwrap();
        let moved = state::apply_ilo(&named::dicke2(), &w.ilo).unwrap();
        let f = abcd_split(&moved, w.partition_qubit).unwrap();
        for phi in [f.phi0.unwrap(), f.phi1.unwrap()] {
            assert_eq!(crate::slocc::classify3(&phi).unwrap().kind, Kind3::Ghz);
        }
    }

    #[test]
    fn ghz4_has_product_halves() {
        let v = is_irreducible(&named::ghz4()).unwrap();
        assert!(!v.irreducible);
        let w = v.witness.unwrap();
        assert_eq!(w.escaped_class, Kind3::Product);
        assert_eq!(w.ilo, Ilo::identity(1));
    }

    #[test]
    fn family_states_are_irreducible() {
        let s = build_family_state(FamilyParams::Case1 { c6: c(1.0), c7: c(1.0), upper: true }).unwrap();
        let want =
            PureState::from_real(&[0.0, 0.0, 0.0, 4.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0])
                .unwrap();
        assert!(state::overlap2(&s, &want).unwrap() > 1.0 - 1e-15);
        assert!(is_irreducible(&s).unwrap().irreducible);
        let s = build_family_state(FamilyParams::Case2 { c3: c(2.0), c5: c(4.0) }).unwrap();
        assert!(is_irreducible(&s).unwrap().irreducible);
        assert!(build_family_state(FamilyParams::Case2 { c3: c(2.0), c5: c(2.0) }).is_err());
        assert!(build_family_state(FamilyParams::Case1 { c6: c(1.0), c7: c(1.0), upper: false }).is_err());
    }

    #[test]
    fn quartic_roots_keep_w_class() {
        let phi = state::apply_ilos(&named::w3(), &[random_ilo(1, 5), random_ilo(2, 6), random_ilo(3, 7)]).unwrap();
        let roots = quartic_lambda_roots(&phi).unwrap();
        assert!(roots.len() <= 4);
        let ghz = named::ghz3_raw();
        for r in &roots {
            let v: Vec<C64> = phi.amps().iter().zip(&ghz).map(|(a, g)| a + r * g).collect();
            let p = crate::state::coeff_matrices_raw(&v, 1).unwrap();
            let h = crate::slocc::hyperdeterminant(&p.c0, &p.c1);
            let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max).powi(4);
            assert!(h.norm() < 1e-8 * scale);
        }
        let star = root_avoiding(&roots);
        assert!(roots.iter().all(|r| (r - star).norm() > 0.5));
    }
}
