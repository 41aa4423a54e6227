//! Exact tree size for up to four qubits, minimal-tree construction and a
//! brute-force oracle backed by the overlap optimizer.
//!
//! Tree size is additive over tensor factors (contracting the other factor's
//! leaves with a product bra turns any tree of the whole into trees of each
//! factor), so factorizable states are handled part by part. Three-qubit
//! states are settled by their SLOCC class. A four-qubit state that does not
//! factor needs a sum of at least two full-cover branches, hence at least 8
//! leaves; irreducible states have exactly 16 and every other state gets an
//! upper bound from a split at one qubit.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::abcd::{self, check_family, reduce_to_normal_form, Family};
use crate::approx::{self, OptConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, ONE, ZERO};
use crate::slocc::{self, classify3_raw, Kind3, TOL_RANK};
use crate::state::{self, split_raw, PureState};
use crate::tree::{self, ilo_pullback_all, print_braket, tree_to_json, TreeNode, TreeShape};

/// Required overlap between a constructed tree and its input.
pub const TREE_TOLERANCE: f64 = 1e-10;
/// Overlap at which the oracle accepts a shape as representing the state.
pub const ORACLE_ACCEPT: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Classification,
    IrreducibleDetection,
    Construction,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Classification => "Classification",
            Method::IrreducibleDetection => "IrreducibleDetection",
            Method::Construction => "Construction",
            Method::Oracle => "Oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsResult {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    /// A tree with `upper` leaves evaluating to the state.
    pub tree: TreeNode,
    pub method: Method,
}

impl TsResult {
    fn new(lower: usize, tree: TreeNode, method: Method) -> Self {
        let upper = tree.size();
        TsResult { lower, upper, exact: lower == upper, tree, method }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "method": self.method.name(),
            "tree": print_braket(&self.tree),
            "tree_json": tree_to_json(&self.tree),
        })
    }
}

/// Tree size of a one- to four-qubit state.
pub fn ts(state: &PureState) -> Result<TsResult> {
    match state.n_qubits() {
        1 => Ok(TsResult::new(1, leaf_tree(state.amps(), 1), Method::Classification)),
        2 => ts2(state),
        3 => ts3(state),
        4 => ts4(state),
        n => Err(Error::Unsupported(format!("tree size for {n} qubits"))),
    }
}

pub fn ts2(state: &PureState) -> Result<TsResult> {
    expect_qubits(state, 2)?;
    build(state.amps(), &[1, 2])?.into_result(state)
}

pub fn ts3(state: &PureState) -> Result<TsResult> {
    expect_qubits(state, 3)?;
    build(state.amps(), &[1, 2, 3])?.into_result(state)
}

pub fn ts4(state: &PureState) -> Result<TsResult> {
    expect_qubits(state, 4)?;
    build(state.amps(), &[1, 2, 3, 4])?.into_result(state)
}

/// Minimal tree of a three-qubit state: 3, 5, 6 or 8 leaves by class.
pub fn decompose3(state: &PureState) -> Result<TreeNode> {
    expect_qubits(state, 3)?;
    let t = three_qubit(state.amps(), &[1, 2, 3])?.tree;
    verify(&t, state)?;
    Ok(t)
}

fn expect_qubits(state: &PureState, n: usize) -> Result<()> {
    if state.n_qubits() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} qubits, got {}", state.n_qubits())));
    }
    Ok(())
}

/// Checks that `tree` evaluates to `state` and returns the overlap.
pub fn verify(tree: &TreeNode, state: &PureState) -> Result<f64> {
    let (_, v) = tree.evaluate_raw()?;
    let o = state::overlap2_raw(&v, state.amps());
    if o < 1.0 - TREE_TOLERANCE {
        return Err(Error::Degenerate(format!("constructed tree reproduces the state only to overlap {o:.12}")));
    }
    Ok(o)
}

struct Built {
    tree: TreeNode,
    lower: usize,
    method: Method,
}

impl Built {
    fn into_result(self, state: &PureState) -> Result<TsResult> {
        verify(&self.tree, state)?;
        Ok(TsResult::new(self.lower, self.tree, self.method))
    }
}

fn leaf_tree(amps: &[C64], q: usize) -> TreeNode {
    TreeNode::leaf_amp(q, amps[0], amps[1])
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Best tree known for a vector over the ascending qubit list `qs`.
fn build(amps: &[C64], qs: &[usize]) -> Result<Built> {
    if norm(amps) == 0.0 {
        return Err(Error::ZeroVector);
    }
    match qs.len() {
        1 => Ok(Built { tree: leaf_tree(amps, qs[0]), lower: 1, method: Method::Classification }),
        3 => three_qubit(amps, qs),
        k => {
            if let Some(parts) = factorize(amps, qs) {
                return product_of_parts(parts);
            }
            if k == 2 {
                Ok(Built { tree: schmidt_tree(amps, qs), lower: 4, method: Method::Classification })
            } else {
                four_qubit(amps, qs)
            }
        }
    }
}

type Part = (Vec<C64>, Vec<usize>);

fn product_of_parts(parts: (Part, Part)) -> Result<Built> {
    let ((a, qa), (b, qb)) = parts;
    let x = build(&a, &qa)?;
    let y = build(&b, &qb)?;
    let method = if x.method == Method::Construction || y.method == Method::Construction {
        Method::Construction
    } else {
        x.method
    };
    Ok(Built { tree: TreeNode::product(vec![x.tree, y.tree]), lower: x.lower + y.lower, method })
}

/// Rows indexed by the qubits at `positions`, columns by the rest (both in
/// ascending order).
fn reshape(amps: &[C64], k: usize, positions: &[usize]) -> DMatrix<C64> {
    let rows = 1 << positions.len();
    let cols = (1 << k) / rows;
    let mut m = DMatrix::from_element(rows, cols, ZERO);
    for (idx, &z) in amps.iter().enumerate() {
        let (mut r, mut c) = (0, 0);
        for p in 0..k {
            let bit = (idx >> (k - 1 - p)) & 1;
            if positions.contains(&p) {
                r = (r << 1) | bit;
            } else {
                c = (c << 1) | bit;
            }
        }
        m[(r, c)] = z;
    }
    m
}

/// Dominant rank-one term `u vᵀ` of a matrix, with its singular value ratio.
fn rank_one(m: &DMatrix<C64>) -> (Vec<C64>, Vec<C64>, f64) {
    let svd = m.clone().svd(false, true);
    let sv = &svd.singular_values;
    let (mut best, mut second) = (0, None::<usize>);
    for i in 1..sv.len() {
        if sv[i] > sv[best] {
            best = i;
        }
    }
    for i in 0..sv.len() {
        if i != best && second.is_none_or(|s| sv[i] > sv[s]) {
            second = Some(i);
        }
    }
    let ratio = match second {
        Some(s) if sv[best] > 0.0 => sv[s] / sv[best],
        _ => 0.0,
    };
    let vt = svd.v_t.as_ref().expect("requested");
    let right: Vec<C64> = (0..m.ncols()).map(|c| vt[(best, c)]).collect();
    // project onto the right vector so both factors stay consistent even when
    // the decomposition of a rank-deficient input mixes its singular pairs
    let left = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)] * right[c].conj()).sum()).collect();
    (left, right, ratio)
}

/// Splits the qubits at `positions` off as a tensor factor, regardless of
/// whether the vector actually factors.
fn split_factor(amps: &[C64], qs: &[usize], positions: &[usize]) -> ((Part, Part), f64) {
    let (left, right, ratio) = rank_one(&reshape(amps, qs.len(), positions));
    let qa = positions.iter().map(|&p| qs[p]).collect();
    let qb = (0..qs.len()).filter(|p| !positions.contains(p)).map(|p| qs[p]).collect();
    (((left, qa), (right, qb)), ratio)
}

/// The first cut (smallest side first) across which the vector factors.
fn factorize(amps: &[C64], qs: &[usize]) -> Option<(Part, Part)> {
    let k = qs.len();
    // each cut once, by the side holding the first qubit
    let mut cuts: Vec<Vec<usize>> =
        (1u32..(1 << k) - 1).filter(|s| s & 1 == 1).map(|s| (0..k).filter(|p| s & (1 << p) != 0).collect()).collect();
    cuts.sort_by_key(|c: &Vec<usize>| c.len().min(k - c.len()));
    cuts.into_iter().find_map(|c| {
        let (parts, ratio) = split_factor(amps, qs, &c);
        (ratio <= TOL_RANK).then_some(parts)
    })
}

/// `|0⟩|row₀⟩ + |1⟩|row₁⟩` written with Schmidt vectors.
fn schmidt_tree(amps: &[C64], qs: &[usize]) -> TreeNode {
    let m: Mat2 = [[amps[0], amps[1]], [amps[2], amps[3]]];
    let (sigma, us, vs) = linalg::svd2(&m);
    let branches = (0..2)
        .map(|k| {
            TreeNode::product(vec![
                TreeNode::leaf_amp(qs[0], us[k][0] * sigma[k], us[k][1] * sigma[k]),
                TreeNode::leaf_amp(qs[1], vs[k][0], vs[k][1]),
            ])
        })
        .collect();
    TreeNode::sum(branches)
}

/// Any two-qubit vector as a 4-leaf tree, or a 2-leaf product when it has
/// rank one.
fn two_qubit_tree(amps: &[C64], qs: &[usize], rank_one_hint: bool) -> TreeNode {
    let m: Mat2 = [[amps[0], amps[1]], [amps[2], amps[3]]];
    if rank_one_hint {
        let (r, s) = linalg::rank_one_factors(&m);
        return TreeNode::product(vec![TreeNode::leaf_amp(qs[0], r[0], r[1]), TreeNode::leaf_amp(qs[1], s[0], s[1])]);
    }
    TreeNode::sum(vec![
        TreeNode::product(vec![TreeNode::leaf_amp(qs[0], ONE, ZERO), TreeNode::leaf_amp(qs[1], m[0][0], m[0][1])]),
        TreeNode::product(vec![TreeNode::leaf_amp(qs[0], ZERO, ONE), TreeNode::leaf_amp(qs[1], m[1][0], m[1][1])]),
    ])
}

/// `Σ_j (K⁻¹[0][j]|0⟩ + K⁻¹[1][j]|1⟩) ⊗ m_j` for the pencil members
/// `m_j = K[j][0]·h₀ + K[j][1]·h₁` of the split at the first qubit of `qs`.
fn pencil_tree(
    k: &Mat2,
    h0: &[C64],
    h1: &[C64],
    qs: &[usize],
    mut sub: impl FnMut(usize, &[C64], &[usize]) -> Result<TreeNode>,
) -> Result<TreeNode> {
    let kinv = linalg::inverse(k).ok_or_else(|| Error::Degenerate("pencil points coincide".into()))?;
    let rest = &qs[1..];
    let mut branches = Vec::with_capacity(2);
    for j in 0..2 {
        let member: Vec<C64> = h0.iter().zip(h1).map(|(a, b)| k[j][0] * a + k[j][1] * b).collect();
        let t = sub(j, &member, rest)?;
        branches.push(TreeNode::product(vec![TreeNode::leaf_amp(qs[0], kinv[0][j], kinv[1][j]), t]));
    }
    Ok(TreeNode::sum(branches))
}

fn three_qubit(amps: &[C64], qs: &[usize]) -> Result<Built> {
    let class = classify3_raw(amps)?;
    let tree = match class.kind {
        Kind3::Product => {
            let ((a, qa), (rest, qr)) = split_factor(amps, qs, &[0]).0;
            let ((b, qb), (c, qc)) = split_factor(&rest, &qr, &[0]).0;
            TreeNode::product(vec![leaf_tree(&a, qa[0]), leaf_tree(&b, qb[0]), leaf_tree(&c, qc[0])])
        }
        Kind3::Biseparable(q) => {
            let ((a, qa), (pair, qp)) = split_factor(amps, qs, &[q - 1]).0;
            TreeNode::product(vec![leaf_tree(&a, qa[0]), schmidt_tree(&pair, &qp)])
        }
        Kind3::Ghz => {
            let (h0, h1) = split_raw(amps, 3, 1)?;
            let p = state::coeff_matrices_raw(amps, 1)?;
            let (a, b, c) = slocc::pencil_form(&p.c0, &p.c1);
            let roots = linalg::binary_quadratic_roots(a, b, c, 0.0)
                .ok_or_else(|| Error::Degenerate("pencil vanishes identically".into()))?;
            let k = [[roots[0].0, roots[0].1], [roots[1].0, roots[1].1]];
            pencil_tree(&k, &h0, &h1, qs, |_, m, rest| Ok(two_qubit_tree(m, rest, true)))?
        }
        Kind3::W => {
            let (h0, h1) = split_raw(amps, 3, 1)?;
            let p = state::coeff_matrices_raw(amps, 1)?;
            let (a, b, c) = slocc::pencil_form(&p.c0, &p.c1);
            let (x, y) = match linalg::binary_quadratic_roots(a, b, c, 0.0) {
                Some(r) => r[0],
                None => slocc::pencil_double_root(&p.c0, &p.c1),
            };
            let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (x, y) = (x / n, y / n);
            let k = [[x, y], [-y.conj(), x.conj()]];
            pencil_tree(&k, &h0, &h1, qs, |j, m, rest| Ok(two_qubit_tree(m, rest, j == 0)))?
        }
    };
    let lower = match class.kind {
        Kind3::Product => 3,
        Kind3::Biseparable(_) => 5,
        Kind3::Ghz => 6,
        Kind3::W => 8,
    };
    Ok(Built { tree, lower, method: Method::Classification })
}

fn four_qubit(amps: &[C64], qs: &[usize]) -> Result<Built> {
    let local = state::normalize(amps.to_vec())?;
    let verdict = abcd::is_irreducible(&local)?;
    let scale = C64::new(norm(amps), 0.0);
    if verdict.irreducible {
        let t = decompose4_irreducible(&local)?;
        let tree = relabel_positions(&t, qs).scaled(scale);
        return Ok(Built { tree, lower: 16, method: Method::IrreducibleDetection });
    }
    let tree = relabel_positions(&best_split_tree(&local)?, qs).scaled(scale);
    Ok(Built { tree, lower: 8, method: Method::Construction })
}

fn relabel_positions(t: &TreeNode, qs: &[usize]) -> TreeNode {
    t.relabel(&|q| qs[q - 1])
}

/// Rescales `tree` so that it evaluates to `target` (not just up to a
/// factor).
fn fit_scale(tree: TreeNode, target: &[C64]) -> Result<TreeNode> {
    let (_, v) = tree.evaluate_raw()?;
    let vv = state::inner(&v, &v);
    if vv.norm() == 0.0 {
        return Err(Error::Degenerate("constructed tree evaluates to zero".into()));
    }
    Ok(tree.scaled(state::inner(&v, target) / vv))
}

fn two_qubit_factor(q: (usize, usize), amps: [C64; 4]) -> TreeNode {
    two_qubit_tree(&amps, &[q.0, q.1], false)
}

/// The T8+T8 tree `φ₁₂⊗ϕ₃₄ + φ′₁₃⊗ϕ′₂₄` of a state with irreducible
/// A|BCD form.
pub fn decompose4_irreducible(state: &PureState) -> Result<TreeNode> {
    expect_qubits(state, 4)?;
    if !abcd::is_irreducible(state)?.irreducible {
        return Err(Error::NotIrreducible);
    }
    let red = reduce_to_normal_form(state, 1)?;
    let nf = red.nf;
    let (c3, c4, c5, c6, c7) = (nf.get(3), nf.get(4), nf.get(5), nf.get(6), nf.get(7));
    let z = ZERO;
    // amplitudes listed as |00⟩, |01⟩, |10⟩, |11⟩ of each pair
    let [f12, g34, f13, g24] = match check_family(&nf) {
        Family::Case1 => {
            let t = c7.sqrt();
            let sign = abcd::case1_sign(&nf).ok_or(Error::NotIrreducible)?;
            let s = sign * c6.sqrt();
            debug_assert!((c4 - (s + t).powi(2)).norm() <= 1e-6 * c4.norm().max(1.0));
            [[z, -s * t, ONE, z], [z, -s / t, ONE, z], [z, t * (t + s), ONE, z], [z, (t + s) / t, ONE, z]]
        }
        Family::Case2 => {
            let d = c5 * (c5 - c3);
            [
                [2.0 * c3 / d, ONE, 4.0 / d, z],
                [c5 / 2.0, c5 * c5 / 4.0, d / 4.0, z],
                [c5 / (c3 - c5), c3 / 2.0, 2.0 / (c3 - c5), z],
                [ONE, c3 / 2.0, (c3 - c5) / 2.0, z],
            ]
        }
        Family::Neither => return Err(Error::NotIrreducible),
    };
    let normal = TreeNode::sum(vec![
        TreeNode::product(vec![two_qubit_factor((1, 2), f12), two_qubit_factor((3, 4), g34)]),
        TreeNode::product(vec![two_qubit_factor((1, 3), f13), two_qubit_factor((2, 4), g24)]),
    ]);
    let (_, nv) = normal.evaluate_raw()?;
    let want = red.normal_form_state();
    if state::overlap2_raw(&nv, &want) < 1.0 - TREE_TOLERANCE {
        return Err(Error::Degenerate("T8+T8 formulas do not reproduce the normal form".into()));
    }
    let inverses: Vec<_> = red.ops.iter().map(|op| op.inverse()).collect();
    let pulled = ilo_pullback_all(&normal, &inverses)?;
    let tree = fit_scale(pulled, state.amps())?;
    verify(&tree, state)?;
    Ok(tree)
}

/// Tree for a four-qubit state without irreducible form, at most 15 leaves
/// (at most 14 when some split has a GHZ-class half).
pub fn decompose4_reducible(state: &PureState) -> Result<TreeNode> {
    expect_qubits(state, 4)?;
    let verdict = abcd::is_irreducible(state)?;
    if verdict.irreducible || verdict.witness.is_none() {
        return Err(Error::WitnessMissing);
    }
    if let Some(parts) = factorize(state.amps(), &[1, 2, 3, 4]) {
        let t = product_of_parts(parts)?.tree;
        verify(&t, state)?;
        return Ok(t);
    }
    best_split_tree(state)
}

/// Binary quadratics whose common roots are the pencil points where the
/// member has rank one across the cut at `q`.
fn rank_one_conditions(h0: &[C64], h1: &[C64], q: usize) -> Vec<(C64, C64, C64)> {
    let a = reshape(h0, 3, &[q]);
    let b = reshape(h1, 3, &[q]);
    let mut out = Vec::new();
    for j in 0..4 {
        for k in j + 1..4 {
            let da = a[(0, j)] * a[(1, k)] - a[(0, k)] * a[(1, j)];
            let db = b[(0, j)] * b[(1, k)] - b[(0, k)] * b[(1, j)];
            let mixed = a[(0, j)] * b[(1, k)] + b[(0, j)] * a[(1, k)] - a[(0, k)] * b[(1, j)] - b[(0, k)] * a[(1, j)];
            out.push((da, mixed, db));
        }
    }
    out
}

/// Projective pencil points worth trying as halves of a split.
fn candidate_points(h0: &[C64], h1: &[C64]) -> Vec<(C64, C64)> {
    let mut points = vec![(ONE, ZERO), (ZERO, ONE)];
    let mut lambdas = Vec::new();
    let quartic = abcd::hyperdeterminant_pencil(h0, h1);
    let scale = norm(h0).max(norm(h1));
    if quartic.max_coeff() > 1e-12 * scale.powi(4) {
        lambdas.extend(quartic.roots(1e-12));
    }
    for q in 0..3 {
        let conds = rank_one_conditions(h0, h1, q);
        let strongest = conds
            .iter()
            .max_by(|x, y| {
                let nx = x.0.norm().max(x.1.norm()).max(x.2.norm());
                let ny = y.0.norm().max(y.1.norm()).max(y.2.norm());
                nx.total_cmp(&ny)
            })
            .copied();
        if let Some((a, b, c)) = strongest {
            if let Some(roots) = linalg::binary_quadratic_roots(a, b, c, 1e-12 * scale * scale) {
                points.extend(roots);
            }
        }
    }
    let star = abcd::root_avoiding(&lambdas);
    points.extend(lambdas.iter().map(|&l| (ONE, l)));
    points.push((ONE, star));
    points.push((ONE, -star));
    points
}

fn member_size(h0: &[C64], h1: &[C64], p: (C64, C64)) -> Option<usize> {
    let m: Vec<C64> = h0.iter().zip(h1).map(|(a, b)| p.0 * a + p.1 * b).collect();
    if norm(&m) <= 1e-12 * norm(h0).max(norm(h1)) {
        return None;
    }
    let class = classify3_raw(&m).ok()?;
    Some(match class.kind {
        Kind3::Product => 3,
        Kind3::Biseparable(_) => 5,
        Kind3::Ghz => 6,
        Kind3::W => 8,
    })
}

/// Smallest `leaf ⊗ tree + leaf ⊗ tree` over every split qubit and pairs of
/// candidate pencil points.
fn best_split_tree(state: &PureState) -> Result<TreeNode> {
    let mut best: Option<TreeNode> = None;
    for a in 1..=4 {
        let perm_qs: Vec<usize> = std::iter::once(a).chain((1..=4).filter(|&q| q != a)).collect();
        let (h0, h1) = split_raw(state.amps(), 4, a)?;
        let mut sized: Vec<((C64, C64), usize)> =
            candidate_points(&h0, &h1).into_iter().filter_map(|p| member_size(&h0, &h1, p).map(|s| (p, s))).collect();
        sized.sort_by_key(|x| x.1);
        let mut pairs = Vec::new();
        for i in 0..sized.len() {
            for j in i + 1..sized.len() {
                let k = [[sized[i].0 .0, sized[i].0 .1], [sized[j].0 .0, sized[j].0 .1]];
                if linalg::condition_number(&k) <= 1e6 {
                    pairs.push((sized[i].1 + sized[j].1, k));
                }
            }
        }
        pairs.sort_by_key(|p| p.0);
        for (size, k) in pairs {
            if best.as_ref().is_some_and(|b| b.size() <= size + 2) {
                break;
            }
            let attempt = pencil_tree(&k, &h0, &h1, &perm_qs, |_, m, rest| Ok(build(m, rest)?.tree));
            if let Ok(t) = attempt {
                let (_, v) = t.evaluate_raw()?;
                if state::overlap2_raw(&v, state.amps()) >= 1.0 - TREE_TOLERANCE {
                    best = Some(t);
                    break;
                }
            }
        }
    }
    let t = best.ok_or_else(|| Error::Degenerate("no split reproduces the state".into()))?;
    verify(&t, state)?;
    Ok(t)
}

/// Outcome of the brute-force scan.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Smallest size at which some shape reaches the acceptance overlap.
    pub tree_size: Option<usize>,
    /// Best overlap at `tree_size`, or over every tested shape when none
    /// was accepted.
    pub best_overlap: f64,
    pub best_shape: Option<TreeShape>,
    pub shapes_tested: usize,
}

impl OracleReport {
    pub fn to_json(&self) -> Value {
        json!({
            "tree_size": self.tree_size,
            "found": self.tree_size.is_some(),
            "best_overlap": self.best_overlap,
            "best_shape": self.best_shape.as_ref().map(|s| s.signature()),
            "shapes_tested": self.shapes_tested,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBudget {
    pub restarts: usize,
    /// Largest number of shapes the scan may optimize over.
    pub max_shapes: usize,
    pub seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { restarts: 64, max_shapes: 20_000, seed: 0 }
    }
}

/// Smallest leaf count `S ≤ max_leaves` at which some shape reaches overlap
/// `1 − 1e-8` with the state, scanning sizes upward.
pub fn ts_oracle(state: &PureState, max_leaves: usize, budget: &OracleBudget) -> Result<OracleReport> {
    let n = state.n_qubits();
    if !(1..=4).contains(&n) || max_leaves > 16 {
        return Err(Error::Unsupported(format!("oracle for {n} qubits up to {max_leaves} leaves")));
    }
    let all = tree::enumerate_shapes(n, max_leaves)?;
    let symmetries = approx::symmetries(state);
    let cfg = OptConfig { restarts: budget.restarts, stop_at: Some(ORACLE_ACCEPT), ..OptConfig::default() };
    let mut report = OracleReport { tree_size: None, best_overlap: 0.0, best_shape: None, shapes_tested: 0 };
    for size in n..=max_leaves {
        let level: Vec<TreeShape> = all.iter().filter(|s| s.size() == size).cloned().collect();
        let pool = approx::orbit_representatives(tree::maximal_shapes(&level), &symmetries);
        report.shapes_tested += pool.len();
        if report.shapes_tested > budget.max_shapes {
            return Err(Error::BudgetExceeded(format!("oracle needs more than {} shapes", budget.max_shapes)));
        }
        for (i, shape) in pool.iter().enumerate() {
            let r = approx::max_overlap_with(state, shape, &cfg, budget.seed.wrapping_add(i as u64))?;
            if r.best_overlap > report.best_overlap {
                report.best_overlap = r.best_overlap;
                report.best_shape = Some(shape.clone());
            }
            if r.best_overlap >= ORACLE_ACCEPT {
                report.tree_size = Some(size);
                report.best_overlap = r.best_overlap;
                report.best_shape = Some(shape.clone());
                return Ok(report);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abcd::{build_family_state, FamilyParams};
    use crate::state::{apply_ilos, named, random_ilo};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn two_qubit_values() {
        let product = PureState::from_real(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let r = ts2(&product).unwrap();
        assert_eq!((r.lower, r.upper), (2, 2));
        let r = ts2(&named::bell()).unwrap();
        assert_eq!((r.lower, r.upper), (4, 4));
    }

    #[test]
    fn three_qubit_representatives() {
        for (s, want) in [(named::product3(), 3), (named::biseparable3(), 5), (named::ghz3(), 6), (named::w3(), 8)] {
            let r = ts3(&s).unwrap();
            assert!(r.exact);
            assert_eq!(r.upper, want);
            assert_eq!(r.tree.size(), want);
        }
    }

    #[test]
    fn three_qubit_ilo_images() {
        for seed in 0..25u64 {
            let ops: Vec<_> = (1..=3).map(|q| random_ilo(q, 100 + seed * 3 + q as u64)).collect();
            for (s, want) in [(named::biseparable3(), 5), (named::ghz3(), 6), (named::w3(), 8)] {
                let img = apply_ilos(&s, &ops).unwrap();
                let t = decompose3(&img).unwrap();
                assert_eq!(t.size(), want);
            }
        }
    }

    #[test]
    fn four_qubit_values() {
        let zero =
            PureState::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
                .unwrap();
        let r = ts4(&zero).unwrap();
        assert_eq!((r.lower, r.upper, r.exact), (4, 4, true));
        let r = ts4(&named::ghz4()).unwrap();
        assert_eq!((r.lower, r.upper), (8, 8));
        let r = ts4(&named::psi4()).unwrap();
        assert_eq!((r.lower, r.upper, r.method), (16, 16, Method::IrreducibleDetection));
        let r = ts4(&named::dicke2()).unwrap();
        assert!(r.upper <= 14, "{}", r.upper);
        assert_eq!(r.lower, 8);
    }

    #[test]
    fn factorized_four_qubit_states_add_up() {
        let w_and_leaf: Vec<C64> = named::w3().amps().iter().flat_map(|&z| [z, z * 0.5]).collect();
        let s = state::normalize(w_and_leaf).unwrap();
        let r = ts4(&s).unwrap();
        assert_eq!((r.lower, r.upper), (9, 9));
        let bb: Vec<C64> = (0..16)
            .map(|i| {
                let (a, b) = (i >> 2, i & 3);
                named::bell().amps()[a] * named::bell().amps()[b]
            })
            .collect();
        let r = ts4(&state::normalize(bb).unwrap()).unwrap();
        assert_eq!((r.lower, r.upper), (8, 8));
    }

    #[test]
    fn irreducible_tree_crosses() {
        let t = decompose4_irreducible(&named::psi4()).unwrap();
        assert_eq!(t.size(), 16);
        let TreeNode::Sum(branches) = &t else { panic!("root must be a sum") };
        let masks: Vec<Vec<u16>> =
            branches.iter().map(|b| b.children().iter().map(|f| f.qubit_set()).collect()).collect();
        assert!(masks.iter().any(|m| m.contains(&0b0011) && m.contains(&0b1100)));
        assert!(masks.iter().any(|m| m.contains(&0b0101) && m.contains(&0b1010)));
    }

    #[test]
    fn family_states_decompose() {
        for p in [
            FamilyParams::Case1 { c6: c(1.0), c7: c(1.0), upper: true },
            FamilyParams::Case1 { c6: c(2.0), c7: C64::new(0.3, 1.1), upper: false },
            FamilyParams::Case2 { c3: c(2.0), c5: c(4.0) },
            FamilyParams::Case2 { c3: C64::new(0.7, -0.2), c5: C64::new(-1.3, 0.4) },
        ] {
            let s = build_family_state(p).unwrap();
            let t = decompose4_irreducible(&s).unwrap();
            assert_eq!(t.size(), 16);
        }
    }

    #[test]
    fn reducible_constructions() {
        let t = decompose4_reducible(&named::dicke2()).unwrap();
        assert!(t.size() <= 14, "{}", t.size());
        let t = decompose4_reducible(&named::ghz4()).unwrap();
        assert!(t.size() <= 8);
        assert_eq!(decompose4_reducible(&named::psi4()), Err(Error::WitnessMissing));
        for seed in 0..10 {
            let s = state::random_state(4, seed).unwrap();
            let t = decompose4_reducible(&s).unwrap();
            assert!(t.size() <= 15);
        }
    }

    #[test]
    fn product_image_splits_into_exact_factors() {
        use rand::{Rng, SeedableRng};
        // this image's last two-qubit factor is exactly rank one, where the
        // left singular vectors of a full decomposition are unreliable
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11889470113035070885);
        let _ = rng.random_range(0..9);
        let ops = state::random_ilos_with(3, &mut rng);
        let image = apply_ilos(&named::product3(), &ops).unwrap();
        let r = ts3(&image).unwrap();
        assert_eq!((r.lower, r.upper), (3, 3));
        assert!(state::overlap2(&r.tree.evaluate().unwrap(), &image).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn schmidt_tree_handles_rank_one_input() {
        let (x, y, k) = (c(0.3), C64::new(0.1, -0.4), C64::new(2.0, 0.5));
        let amps = [x, y, x * k, y * k];
        let t = schmidt_tree(&amps, &[1, 2]);
        let (_, back) = t.evaluate_raw().unwrap();
        assert!(back.iter().zip(&amps).all(|(x, y)| (x - y).norm() < 1e-12));
    }
}
