//! Rooted ⊗/+ trees whose leaves are single-qubit vectors `a|0⟩ + b|1⟩`.
//!
//! [`TreeNode`] carries leaf amplitudes; [`TreeShape`] keeps only the qubit
//! labels. Both are kept in a flattened canonical form: no Sum directly
//! under a Sum, no Product directly under a Product, every internal node
//! has at least two children, and children are ordered by
//! `(size, qubit set, structure)`.

mod braket;
mod enumerate;
mod json;

pub use braket::{parse_braket, print_braket};
pub use enumerate::{
    canonical_family_name, catalog, catalog_family, enumerate_shapes, enumerate_shapes_with_cap, maximal_shapes,
    shape_cap_from_env, specializes, NamedShape, DEFAULT_SHAPE_CAP, SHAPE_CAP_ENV,
};
pub use json::{tree_from_json, tree_to_json};

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::state::{self, Ilo, PureState, MAX_QUBITS};

/// Amplitudes of a leaf vector `a|0⟩ + b|1⟩`; need not be normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafAmp {
    pub a: C64,
    pub b: C64,
}

impl LeafAmp {
    pub fn new(a: C64, b: C64) -> Self {
        LeafAmp { a, b }
    }

    pub fn zero() -> Self {
        LeafAmp { a: ZERO, b: ZERO }
    }

    pub fn ket0() -> Self {
        LeafAmp { a: ONE, b: ZERO }
    }

    pub fn ket1() -> Self {
        LeafAmp { a: ZERO, b: ONE }
    }

    pub fn scaled(self, s: C64) -> Self {
        LeafAmp { a: self.a * s, b: self.b * s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tree<L> {
    Leaf { qubit: usize, amp: L },
    Product(Vec<Tree<L>>),
    Sum(Vec<Tree<L>>),
}

pub type TreeNode = Tree<LeafAmp>;
pub type TreeShape = Tree<()>;

/// Bit `q-1` set for every qubit `q` in the set.
pub type QubitSet = u16;

pub fn qubit_set_of(qubits: &[usize]) -> QubitSet {
    qubits.iter().fold(0, |m, &q| m | 1 << (q - 1))
}

pub fn qubits_in(set: QubitSet) -> Vec<usize> {
    (1..=16).filter(|q| set & (1 << (q - 1)) != 0).collect()
}

impl<L> Tree<L> {
    pub fn leaf(qubit: usize, amp: L) -> Self {
        Tree::Leaf { qubit, amp }
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Product(c) | Tree::Sum(c) => c.iter().map(Tree::size).sum(),
        }
    }

    pub fn qubit_set(&self) -> QubitSet {
        match self {
            Tree::Leaf { qubit, .. } => 1 << (qubit - 1),
            Tree::Product(c) | Tree::Sum(c) => c.iter().fold(0, |m, t| m | t.qubit_set()),
        }
    }

    pub fn children(&self) -> &[Tree<L>] {
        match self {
            Tree::Leaf { .. } => &[],
            Tree::Product(c) | Tree::Sum(c) => c,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf { .. })
    }

    /// Same tree with leaf payloads dropped.
    pub fn shape(&self) -> TreeShape {
        self.map_leaves(&mut |q, _| (q, ()))
    }

    pub fn map_leaves<M, F>(&self, f: &mut F) -> Tree<M>
    where
        F: FnMut(usize, &L) -> (usize, M),
    {
        match self {
            Tree::Leaf { qubit, amp } => {
                let (qubit, amp) = f(*qubit, amp);
                Tree::Leaf { qubit, amp }
            }
            Tree::Product(c) => Tree::Product(c.iter().map(|t| t.map_leaves(f)).collect()),
            Tree::Sum(c) => Tree::Sum(c.iter().map(|t| t.map_leaves(f)).collect()),
        }
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<(usize, &L)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(usize, &'a L)>) {
        match self {
            Tree::Leaf { qubit, amp } => out.push((*qubit, amp)),
            Tree::Product(c) | Tree::Sum(c) => c.iter().for_each(|t| t.collect_leaves(out)),
        }
    }

    /// Structural signature ignoring payloads, e.g. `+(*(1,2),*(1,2))`.
    pub fn signature(&self) -> String {
        let mut s = String::new();
        self.write_signature(&mut s);
        s
    }

    fn write_signature(&self, s: &mut String) {
        match self {
            Tree::Leaf { qubit, .. } => {
                let _ = write!(s, "{qubit}");
            }
            Tree::Product(c) | Tree::Sum(c) => {
                s.push(if matches!(self, Tree::Product(_)) { '*' } else { '+' });
                s.push('(');
                for (i, t) in c.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    t.write_signature(s);
                }
                s.push(')');
            }
        }
    }

    /// Canonical ordering key of a subtree.
    pub fn canonical_key(&self) -> (usize, QubitSet, String) {
        (self.size(), self.qubit_set(), self.signature())
    }

    /// Checks the flattened-form invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Tree::Leaf { qubit, .. } => {
                if *qubit == 0 || *qubit > 16 {
                    return Err(Error::QubitCoverage(format!("leaf qubit {qubit} out of range")));
                }
                Ok(())
            }
            Tree::Product(c) => {
                if c.len() < 2 {
                    return Err(Error::QubitCoverage("product with fewer than two children".into()));
                }
                let mut seen: QubitSet = 0;
                for t in c {
                    if matches!(t, Tree::Product(_)) {
                        return Err(Error::QubitCoverage("product directly under product".into()));
                    }
                    let m = t.qubit_set();
                    if seen & m != 0 {
                        return Err(Error::QubitCoverage("product factors share a qubit".into()));
                    }
                    seen |= m;
                    t.validate()?;
                }
                Ok(())
            }
            Tree::Sum(c) => {
                if c.len() < 2 {
                    return Err(Error::QubitCoverage("sum with fewer than two children".into()));
                }
                let m = c[0].qubit_set();
                for t in c {
                    if matches!(t, Tree::Sum(_)) {
                        return Err(Error::QubitCoverage("sum directly under sum".into()));
                    }
                    if t.qubit_set() != m {
                        return Err(Error::QubitCoverage("sum branches cover different qubits".into()));
                    }
                    t.validate()?;
                }
                Ok(())
            }
        }
    }
}

fn flatten_into<L>(children: Vec<Tree<L>>, want_product: bool) -> Vec<Tree<L>> {
    let mut out = Vec::with_capacity(children.len());
    for c in children {
        match c {
            Tree::Product(inner) if want_product => out.extend(inner),
            Tree::Sum(inner) if !want_product => out.extend(inner),
            other => out.push(other),
        }
    }
    out
}

fn sort_children<L>(children: &mut [Tree<L>]) {
    let mut keyed: Vec<_> = children.iter().map(Tree::canonical_key).enumerate().collect();
    keyed.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let order: Vec<usize> = keyed.into_iter().map(|(i, _)| i).collect();
    permute_in_place(children, &order);
}

fn permute_in_place<T>(v: &mut [T], order: &[usize]) {
    // order[k] = old index that should land at k
    let mut pos: Vec<usize> = (0..v.len()).collect(); // pos[old] = current slot
    let mut at: Vec<usize> = (0..v.len()).collect(); // at[slot] = old index there
    for k in 0..v.len() {
        let want = order[k];
        let slot = pos[want];
        if slot != k {
            v.swap(k, slot);
            let displaced = at[k];
            at[slot] = displaced;
            pos[displaced] = slot;
            at[k] = want;
            pos[want] = k;
        }
    }
}

impl TreeShape {
    /// Flattens, drops single-child wrappers, merges sums of leaves on one
    /// qubit and sorts children.
    pub fn canonicalize(self) -> TreeShape {
        canonicalize_with(self, |_| ())
    }

    pub fn product(children: Vec<TreeShape>) -> TreeShape {
        Tree::Product(children).canonicalize()
    }

    pub fn sum(children: Vec<TreeShape>) -> TreeShape {
        Tree::Sum(children).canonicalize()
    }

    pub fn leaf_on(qubit: usize) -> TreeShape {
        Tree::Leaf { qubit, amp: () }
    }

    /// Product of single leaves over `qubits`.
    pub fn product_of(qubits: &[usize]) -> TreeShape {
        if qubits.len() == 1 {
            return TreeShape::leaf_on(qubits[0]);
        }
        TreeShape::product(qubits.iter().map(|&q| TreeShape::leaf_on(q)).collect())
    }

    /// Relabels qubits through `map(q)`, then canonicalizes.
    pub fn relabel(&self, map: &dyn Fn(usize) -> usize) -> TreeShape {
        self.map_leaves(&mut |q, _| (map(q), ())).canonicalize()
    }
}

impl TreeNode {
    pub fn canonicalize(self) -> TreeNode {
        canonicalize_with(self, |leaves: Vec<LeafAmp>| {
            leaves.into_iter().fold(LeafAmp::zero(), |acc, l| LeafAmp::new(acc.a + l.a, acc.b + l.b))
        })
    }

    pub fn product(children: Vec<TreeNode>) -> TreeNode {
        Tree::Product(children).canonicalize()
    }

    pub fn sum(children: Vec<TreeNode>) -> TreeNode {
        Tree::Sum(children).canonicalize()
    }

    pub fn leaf_amp(qubit: usize, a: C64, b: C64) -> TreeNode {
        Tree::Leaf { qubit, amp: LeafAmp::new(a, b) }
    }

    /// Product of leaves, one per qubit, given as `(qubit, a, b)`.
    pub fn product_state(factors: &[(usize, C64, C64)]) -> TreeNode {
        if factors.len() == 1 {
            let (q, a, b) = factors[0];
            return TreeNode::leaf_amp(q, a, b);
        }
        TreeNode::product(factors.iter().map(|&(q, a, b)| TreeNode::leaf_amp(q, a, b)).collect())
    }

    /// Multiplies the represented vector by `s` (one leaf per product
    /// branch absorbs the factor).
    pub fn scaled(&self, s: C64) -> TreeNode {
        match self {
            Tree::Leaf { qubit, amp } => Tree::Leaf { qubit: *qubit, amp: amp.scaled(s) },
            Tree::Product(c) => {
                let mut c = c.clone();
                c[0] = c[0].scaled(s);
                Tree::Product(c)
            }
            Tree::Sum(c) => Tree::Sum(c.iter().map(|t| t.scaled(s)).collect()),
        }
    }

    pub fn relabel(&self, map: &dyn Fn(usize) -> usize) -> TreeNode {
        self.map_leaves(&mut |q, amp| (map(q), *amp)).canonicalize()
    }

    /// Raw (unnormalized) vector over the tree's qubits in ascending order.
    pub fn evaluate_raw(&self) -> Result<(QubitSet, Vec<C64>)> {
        match self {
            Tree::Leaf { qubit, amp } => Ok((1 << (qubit - 1), vec![amp.a, amp.b])),
            Tree::Product(c) => {
                let mut acc: (QubitSet, Vec<C64>) = (0, vec![ONE]);
                for t in c {
                    let (m, v) = t.evaluate_raw()?;
                    if acc.0 & m != 0 {
                        return Err(Error::QubitCoverage("product factors share a qubit".into()));
                    }
                    acc = tensor_merge(&acc, &(m, v));
                }
                Ok(acc)
            }
            Tree::Sum(c) => {
                let mut iter = c.iter();
                let first = iter.next().ok_or_else(|| Error::QubitCoverage("empty sum".into()))?.evaluate_raw()?;
                let (mask, mut v) = first;
                for t in iter {
                    let (m, w) = t.evaluate_raw()?;
                    if m != mask {
                        return Err(Error::QubitCoverage("sum branches cover different qubits".into()));
                    }
                    v.iter_mut().zip(w).for_each(|(x, y)| *x += y);
                }
                Ok((mask, v))
            }
        }
    }

    /// Normalized state; the leaves must cover exactly `1..=n`.
    pub fn evaluate(&self) -> Result<PureState> {
        let (mask, v) = self.evaluate_raw()?;
        let n = mask.count_ones() as usize;
        if n == 0 || n > MAX_QUBITS || mask != (1 << n) - 1 {
            return Err(Error::QubitCoverage(format!(
                "leaves cover qubits {:?}, expected 1..={n} with n ≤ {MAX_QUBITS}",
                qubits_in(mask)
            )));
        }
        state::normalize(v)
    }
}

/// Tensor product of two vectors over disjoint qubit sets, re-indexed to
/// the ascending order of the union.
fn tensor_merge(a: &(QubitSet, Vec<C64>), b: &(QubitSet, Vec<C64>)) -> (QubitSet, Vec<C64>) {
    let mask = a.0 | b.0;
    let qs = qubits_in(mask);
    let qa = qubits_in(a.0);
    let qb = qubits_in(b.0);
    let k = qs.len();
    let mut out = vec![ZERO; 1 << k];
    for (idx, o) in out.iter_mut().enumerate() {
        let bit = |q: usize| (idx >> (k - 1 - qs.iter().position(|&x| x == q).unwrap())) & 1;
        let ia = qa.iter().fold(0, |acc, &q| acc << 1 | bit(q));
        let ib = qb.iter().fold(0, |acc, &q| acc << 1 | bit(q));
        *o = a.1[ia] * b.1[ib];
    }
    (mask, out)
}

fn canonicalize_with<L: Clone, F>(t: Tree<L>, merge_leaves: F) -> Tree<L>
where
    F: Fn(Vec<L>) -> L + Copy,
{
    match t {
        Tree::Leaf { .. } => t,
        Tree::Product(children) => {
            let children: Vec<Tree<L>> = children.into_iter().map(|c| canonicalize_with(c, merge_leaves)).collect();
            let mut children = flatten_into(children, true);
            if children.len() == 1 {
                return children.pop().unwrap();
            }
            sort_children(&mut children);
            Tree::Product(children)
        }
        Tree::Sum(children) => {
            let children: Vec<Tree<L>> = children.into_iter().map(|c| canonicalize_with(c, merge_leaves)).collect();
            let mut children = flatten_into(children, false);
            if children.len() == 1 {
                return children.pop().unwrap();
            }
            let single_qubit = children.iter().all(|c| c.is_leaf())
                && children.windows(2).all(|w| w[0].qubit_set() == w[1].qubit_set());
            if single_qubit {
                let qubit = match &children[0] {
                    Tree::Leaf { qubit, .. } => *qubit,
                    _ => unreachable!(),
                };
                let amps = children
                    .into_iter()
                    .map(|c| match c {
                        Tree::Leaf { amp, .. } => amp,
                        _ => unreachable!(),
                    })
                    .collect();
                return Tree::Leaf { qubit, amp: merge_leaves(amps) };
            }
            sort_children(&mut children);
            Tree::Sum(children)
        }
    }
}

impl<L> PartialOrd for Tree<L>
where
    L: PartialEq,
{
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.canonical_key().cmp(&other.canonical_key()))
    }
}

/// Applies `op` to every leaf on `op.qubit`; the evaluated state transforms
/// as `apply_ilo`, and the shape is unchanged.
pub fn ilo_pullback_tree(t: &TreeNode, op: &Ilo) -> Result<TreeNode> {
    if t.qubit_set() & (1 << (op.qubit - 1)) == 0 {
        return Err(Error::BadPartition { qubit: op.qubit, n_qubits: t.qubit_set().count_ones() as usize });
    }
    Ok(t.map_leaves(&mut |q, amp| {
        if q == op.qubit {
            let (a, b) = op.act(amp.a, amp.b);
            (q, LeafAmp::new(a, b))
        } else {
            (q, *amp)
        }
    }))
}

/// Pulls a sequence of operators back into the leaves, first to last.
pub fn ilo_pullback_all(t: &TreeNode, ops: &[Ilo]) -> Result<TreeNode> {
    ops.iter().try_fold(t.clone(), |acc, op| ilo_pullback_tree(&acc, op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{apply_ilo, named, overlap2, random_ilo};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell_tree() -> TreeNode {
        TreeNode::sum(vec![
            TreeNode::product_state(&[(1, ONE, ZERO), (2, ONE, ZERO)]),
            TreeNode::product_state(&[(1, ZERO, ONE), (2, ZERO, ONE)]),
        ])
    }

    #[test]
    fn sizes() {
        assert_eq!(TreeNode::leaf_amp(1, ONE, ZERO).size(), 1);
        assert_eq!(bell_tree().size(), 4);
    }

    #[test]
    fn evaluate_examples() {
        let t = TreeNode::product_state(&[(1, ONE, ZERO), (2, ONE, ZERO)]);
        assert_eq!(t.evaluate().unwrap().amps(), &[ONE, ZERO, ZERO, ZERO]);
        let s = bell_tree().evaluate().unwrap();
        assert!(overlap2(&s, &named::bell()).unwrap() > 1.0 - 1e-15);
    }

    #[test]
    fn evaluate_reorders_qubits() {
        // |1>_2 ⊗ |0>_1  = |01>
        let t = TreeNode::product(vec![TreeNode::leaf_amp(2, ZERO, ONE), TreeNode::leaf_amp(1, ONE, ZERO)]);
        assert_eq!(t.evaluate().unwrap().amp("01"), ONE);
    }

    #[test]
    fn coverage_errors() {
        let t = TreeNode::product_state(&[(1, ONE, ZERO), (3, ONE, ZERO)]);
        assert!(matches!(t.evaluate(), Err(Error::QubitCoverage(_))));
        let bad = Tree::Sum(vec![
            TreeNode::leaf_amp(1, ONE, ZERO),
            TreeNode::product_state(&[(1, ONE, ZERO), (2, ONE, ZERO)]),
        ]);
        assert!(matches!(bad.evaluate_raw(), Err(Error::QubitCoverage(_))));
    }

    #[test]
    fn canonical_form_flattens_and_merges() {
        let nested = Tree::Product(vec![
            TreeNode::leaf_amp(3, ONE, ZERO),
            Tree::Product(vec![TreeNode::leaf_amp(2, ONE, ZERO), TreeNode::leaf_amp(1, ONE, ZERO)]),
        ])
        .canonicalize();
        assert_eq!(nested.signature(), "*(1,2,3)");
        nested.validate().unwrap();
        let merged =
            Tree::Sum(vec![TreeNode::leaf_amp(1, c(2.0), ZERO), TreeNode::leaf_amp(1, ZERO, c(3.0))]).canonicalize();
        assert_eq!(merged, TreeNode::leaf_amp(1, c(2.0), c(3.0)));
    }

    #[test]
    fn pullback_matches_apply_ilo() {
        let t = bell_tree();
        let op = random_ilo(2, 4);
        let pulled = ilo_pullback_tree(&t, &op).unwrap();
        assert_eq!(pulled.size(), 4);
        let want = apply_ilo(&t.evaluate().unwrap(), &op).unwrap();
        assert!(overlap2(&pulled.evaluate().unwrap(), &want).unwrap() > 1.0 - 1e-13);
        assert_eq!(ilo_pullback_tree(&t, &Ilo::identity(1)).unwrap(), t);
        assert!(ilo_pullback_tree(&t, &Ilo::identity(3)).is_err());
    }

    #[test]
    fn bit_flip_pullback_on_bell() {
        let x = Ilo::from_real(1, [[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let t = ilo_pullback_tree(&bell_tree(), &x).unwrap();
        assert_eq!(t.size(), 4);
        let s = t.evaluate().unwrap();
        assert!((s.amp("10").norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amp("01").norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn permute_in_place_matches_order() {
        let mut v = vec!['a', 'b', 'c', 'd'];
        permute_in_place(&mut v, &[2, 0, 3, 1]);
        assert_eq!(v, vec!['c', 'a', 'd', 'b']);
    }
}
