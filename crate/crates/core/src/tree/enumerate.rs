//! Shape enumeration, the named shape catalog, and the specialization
//! order used to prune shape pools.
//!
//! A proper subtree over `m` qubits never needs more than `2^m` leaves:
//! every `m`-qubit state (m ≤ 3) has a tree of that size, so a larger subtree
//! can always be swapped for a smaller one representing the same vector.
//! Enumeration therefore caps proper subtrees at `2^m` leaves and only the
//! root is bounded by the caller's leaf budget.

use std::collections::{BTreeMap, HashMap};

use super::{qubits_in, QubitSet, Tree, TreeShape};
use crate::error::{Error, Result};

pub const DEFAULT_SHAPE_CAP: usize = 1_000_000;
pub const SHAPE_CAP_ENV: &str = "TREESIZE_MAX_SHAPES";

/// Enumeration cap from `TREESIZE_MAX_SHAPES`, or the default.
pub fn shape_cap_from_env() -> usize {
    std::env::var(SHAPE_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_SHAPE_CAP)
}

/// A catalog entry: a family name such as `T_W` or `T6+T9` and one qubit
/// assignment of it.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedShape {
    pub family: String,
    pub shape: TreeShape,
}

pub fn enumerate_shapes(n: usize, max_leaves: usize) -> Result<Vec<TreeShape>> {
    enumerate_shapes_with_cap(n, max_leaves, shape_cap_from_env())
}

/// All canonical shapes over qubits `1..=n` with at most `max_leaves`
/// leaves, sorted by canonical key.
pub fn enumerate_shapes_with_cap(n: usize, max_leaves: usize, cap: usize) -> Result<Vec<TreeShape>> {
    if !(1..=4).contains(&n) {
        return Err(Error::Unsupported(format!("shape enumeration for {n} qubits")));
    }
    if max_leaves > 16 {
        return Err(Error::Unsupported(format!("max_leaves = {max_leaves} exceeds 16")));
    }
    let mut e = Enumerator { cap, produced: 0, memo: HashMap::new() };
    let full: QubitSet = (1 << n) - 1;
    let mut shapes = e.any(full, max_leaves)?;
    shapes.sort_by_cached_key(Tree::canonical_key);
    Ok(shapes)
}

struct Enumerator {
    cap: usize,
    produced: usize,
    memo: HashMap<(QubitSet, usize, bool), Vec<TreeShape>>,
}

impl Enumerator {
    fn charge(&mut self, k: usize) -> Result<()> {
        self.produced += k;
        if self.produced > self.cap {
            Err(Error::BudgetTooLarge { cap: self.cap })
        } else {
            Ok(())
        }
    }

    fn subtree_budget(mask: QubitSet, budget: usize) -> usize {
        budget.min(1 << mask.count_ones())
    }

    fn any(&mut self, mask: QubitSet, budget: usize) -> Result<Vec<TreeShape>> {
        if mask.count_ones() == 1 {
            return Ok(vec![TreeShape::leaf_on(mask.trailing_zeros() as usize + 1)]);
        }
        let mut out = self.products(mask, budget)?;
        out.extend(self.sums(mask, budget)?);
        Ok(out)
    }

    /// Shapes over `mask` that are not products: a leaf or a sum.
    fn non_product(&mut self, mask: QubitSet, budget: usize) -> Result<Vec<TreeShape>> {
        if mask.count_ones() == 1 {
            return Ok(vec![TreeShape::leaf_on(mask.trailing_zeros() as usize + 1)]);
        }
        self.sums(mask, budget)
    }

    fn products(&mut self, mask: QubitSet, budget: usize) -> Result<Vec<TreeShape>> {
        if let Some(v) = self.memo.get(&(mask, budget, true)) {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        for blocks in set_partitions(mask).into_iter().filter(|b| b.len() >= 2) {
            let min_size: usize = blocks.iter().map(|b| b.count_ones() as usize).sum();
            if min_size > budget {
                continue;
            }
            let options: Vec<Vec<TreeShape>> = blocks
                .iter()
                .map(|&b| {
                    let slack = budget - min_size + b.count_ones() as usize;
                    self.non_product(b, Self::subtree_budget(b, slack))
                })
                .collect::<Result<_>>()?;
            let mut pick = Vec::with_capacity(blocks.len());
            cartesian(&options, 0, budget, &mut pick, &mut |children: &[&TreeShape]| {
                out.push(Tree::Product(children.iter().map(|&c| c.clone()).collect()).canonicalize());
            });
        }
        self.charge(out.len())?;
        self.memo.insert((mask, budget, true), out.clone());
        Ok(out)
    }

    fn sums(&mut self, mask: QubitSet, budget: usize) -> Result<Vec<TreeShape>> {
        if let Some(v) = self.memo.get(&(mask, budget, false)) {
            return Ok(v.clone());
        }
        let k = mask.count_ones() as usize;
        let mut out = Vec::new();
        if 2 * k <= budget {
            let branch_budget = Self::subtree_budget(mask, budget - k);
            let mut branches = self.products(mask, branch_budget)?;
            branches.sort_by_cached_key(Tree::canonical_key);
            let mut pick = Vec::new();
            multisets(&branches, 0, budget, &mut pick, &mut |chosen: &[&TreeShape]| {
                if chosen.len() >= 2 {
                    out.push(Tree::Sum(chosen.iter().map(|&c| c.clone()).collect()).canonicalize());
                }
            });
        }
        self.charge(out.len())?;
        self.memo.insert((mask, budget, false), out.clone());
        Ok(out)
    }
}

fn cartesian<'a>(
    options: &'a [Vec<TreeShape>],
    i: usize,
    budget: usize,
    pick: &mut Vec<&'a TreeShape>,
    emit: &mut dyn FnMut(&[&TreeShape]),
) {
    if i == options.len() {
        emit(pick);
        return;
    }
    let rest_min: usize = options[i + 1..].iter().map(|o| o.iter().map(Tree::size).min().unwrap_or(0)).sum();
    for s in &options[i] {
        let used = s.size();
        if used + rest_min <= budget {
            pick.push(s);
            cartesian(options, i + 1, budget - used, pick, emit);
            pick.pop();
        }
    }
}

fn multisets<'a>(
    items: &'a [TreeShape],
    start: usize,
    budget: usize,
    pick: &mut Vec<&'a TreeShape>,
    emit: &mut dyn FnMut(&[&TreeShape]),
) {
    emit(pick);
    for i in start..items.len() {
        let s = items[i].size();
        if s <= budget {
            pick.push(&items[i]);
            multisets(items, i, budget - s, pick, emit);
            pick.pop();
        }
    }
}

/// All set partitions of the qubits in `mask`.
fn set_partitions(mask: QubitSet) -> Vec<Vec<QubitSet>> {
    fn go(rest: &[usize], blocks: &mut Vec<QubitSet>, out: &mut Vec<Vec<QubitSet>>) {
        let Some((&q, tail)) = rest.split_first() else {
            out.push(blocks.clone());
            return;
        };
        let bit: QubitSet = 1 << (q - 1);
        for i in 0..blocks.len() {
            blocks[i] |= bit;
            go(tail, blocks, out);
            blocks[i] &= !bit;
        }
        blocks.push(bit);
        go(tail, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(&qubits_in(mask), &mut Vec::new(), &mut out);
    out
}

// ---------- catalog ----------

fn leaf(q: usize) -> TreeShape {
    TreeShape::leaf_on(q)
}

fn entangled_pair(i: usize, j: usize) -> TreeShape {
    TreeShape::sum(vec![TreeShape::product_of(&[i, j]), TreeShape::product_of(&[i, j])])
}

fn biseparable(single: usize, i: usize, j: usize) -> TreeShape {
    TreeShape::product(vec![leaf(single), entangled_pair(i, j)])
}

fn ghz_shape(qs: [usize; 3]) -> TreeShape {
    TreeShape::sum(vec![TreeShape::product_of(&qs), TreeShape::product_of(&qs)])
}

/// `|0⟩|00⟩ + |1⟩(|0'0''⟩ + |1'1''⟩)` with `single` as the split qubit.
fn w_shape(single: usize, i: usize, j: usize) -> TreeShape {
    TreeShape::sum(vec![TreeShape::product_of(&[single, i, j]), biseparable(single, i, j)])
}

fn others(all: &[usize], skip: &[usize]) -> Vec<usize> {
    all.iter().copied().filter(|q| !skip.contains(q)).collect()
}

fn three_qubit_families(qs: [usize; 3]) -> Vec<(&'static str, TreeShape)> {
    let mut out = vec![("T_P", TreeShape::product_of(&qs))];
    for &s in &qs {
        let r = others(&qs, &[s]);
        out.push(("T_B", biseparable(s, r[0], r[1])));
    }
    out.push(("T_GHZ", ghz_shape(qs)));
    for &s in &qs {
        let r = others(&qs, &[s]);
        out.push(("T_W", w_shape(s, r[0], r[1])));
    }
    out
}

/// Product-rooted four-qubit primitives `T4, T6, T7, T8, T9`.
fn four_qubit_primitives() -> Vec<(&'static str, TreeShape)> {
    let all = [1, 2, 3, 4];
    let mut out = vec![("T4", TreeShape::product_of(&all))];
    for i in 1..=4 {
        for j in i + 1..=4 {
            let r = others(&all, &[i, j]);
            out.push(("T6", TreeShape::product(vec![entangled_pair(i, j), leaf(r[0]), leaf(r[1])])));
        }
    }
    for l in 1..=4 {
        let r = others(&all, &[l]);
        out.push(("T7", TreeShape::product(vec![ghz_shape([r[0], r[1], r[2]]), leaf(l)])));
    }
    for j in 2..=4 {
        let r = others(&all, &[1, j]);
        out.push(("T8", TreeShape::product(vec![entangled_pair(1, j), entangled_pair(r[0], r[1])])));
    }
    for l in 1..=4 {
        let r = others(&all, &[l]);
        for &s in &r {
            let p = others(&r, &[s]);
            out.push(("T9", TreeShape::product(vec![w_shape(s, p[0], p[1]), leaf(l)])));
        }
    }
    out
}

const FOUR_QUBIT_COMPOSITES: &[&[&str]] = &[
    &["T4", "T4", "T4"],
    &["T4", "T8"],
    &["T6", "T7"],
    &["T4", "T9"],
    &["T7", "T7"],
    &["T6", "T9"],
    &["T7", "T8"],
    &["T4", "T4", "T7"],
    &["T8", "T8"],
];

/// Resolves alternative family spellings (`T9+T6` is `T6+T9`).
pub fn canonical_family_name(name: &str) -> String {
    let mut parts: Vec<&str> = name.split('+').map(str::trim).collect();
    if parts.iter().all(|p| p.starts_with('T') && p[1..].parse::<u32>().is_ok()) {
        parts.sort_by_key(|p| p[1..].parse::<u32>().unwrap());
    }
    parts.join("+")
}

/// Named shape families over `1..=n`, each with every distinct qubit
/// assignment.
pub fn catalog(n: usize) -> Result<Vec<NamedShape>> {
    let named = |v: Vec<(&str, TreeShape)>| {
        v.into_iter().map(|(f, shape)| NamedShape { family: f.to_string(), shape }).collect::<Vec<_>>()
    };
    match n {
        2 => Ok(named(vec![("T_P", TreeShape::product_of(&[1, 2])), ("T_E", entangled_pair(1, 2))])),
        3 => Ok(named(three_qubit_families([1, 2, 3]))),
        4 => {
            let prims = four_qubit_primitives();
            let mut out = named(prims.clone());
            for combo in FOUR_QUBIT_COMPOSITES {
                let family = combo.join("+");
                let pools: Vec<Vec<&TreeShape>> = combo
                    .iter()
                    .map(|name| prims.iter().filter(|(f, _)| f == name).map(|(_, s)| s).collect())
                    .collect();
                let mut seen = BTreeMap::new();
                let mut pick = Vec::new();
                choose_branches(&pools, 0, 0, &mut pick, &mut |branches: &[&TreeShape]| {
                    let s = TreeShape::sum(branches.iter().map(|&b| b.clone()).collect());
                    seen.entry(s.signature()).or_insert(s);
                });
                out.extend(seen.into_values().map(|shape| NamedShape { family: family.clone(), shape }));
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("catalog for {n} qubits"))),
    }
}

/// One branch per pool; consecutive identical pools choose non-decreasing
/// indices so that multisets are produced once.
fn choose_branches<'a>(
    pools: &[Vec<&'a TreeShape>],
    i: usize,
    min_index: usize,
    pick: &mut Vec<&'a TreeShape>,
    emit: &mut dyn FnMut(&[&'a TreeShape]),
) {
    if i == pools.len() {
        emit(pick);
        return;
    }
    for (k, s) in pools[i].iter().enumerate().skip(min_index) {
        pick.push(s);
        let same_next = i + 1 < pools.len() && pools[i + 1] == pools[i];
        choose_branches(pools, i + 1, if same_next { k } else { 0 }, pick, emit);
        pick.pop();
    }
}

/// All shapes of a named family, accepting alias spellings.
pub fn catalog_family(n: usize, family: &str) -> Result<Vec<TreeShape>> {
    let want = canonical_family_name(family);
    let shapes: Vec<TreeShape> = catalog(n)?.into_iter().filter(|e| e.family == want).map(|e| e.shape).collect();
    if shapes.is_empty() {
        return Err(Error::Unsupported(format!("unknown shape family {family} for {n} qubits")));
    }
    Ok(shapes)
}

// ---------- specialization ----------

fn is_product_shape(t: &TreeShape) -> bool {
    t.size() == t.qubit_set().count_ones() as usize
}

/// Shapes able to represent every state on their qubits.
fn is_universal(t: &TreeShape) -> bool {
    match t.qubit_set().count_ones() {
        1 => true,
        2 => matches!(t, Tree::Sum(_)),
        3 => match t {
            // |0⟩|product⟩ + |1⟩|two-qubit state⟩ in a suitable basis
            Tree::Sum(branches) => branches.iter().any(|b| match b {
                Tree::Product(c) => c.len() == 2 && c.iter().any(|x| matches!(x, Tree::Sum(_))),
                _ => false,
            }),
            _ => false,
        },
        _ => false,
    }
}

/// Sound (not complete) test that every state representable by `a` is
/// representable by `b`.
pub fn specializes(a: &TreeShape, b: &TreeShape) -> bool {
    if a.qubit_set() != b.qubit_set() {
        return false;
    }
    if a == b || is_product_shape(a) || is_universal(b) {
        return true;
    }
    let direct = match (a, b) {
        (Tree::Sum(xs), Tree::Sum(ys)) => xs.len() <= ys.len() && injective_match(xs, ys),
        (_, Tree::Sum(ys)) => ys.iter().any(|y| specializes(a, y)),
        (Tree::Product(xs), Tree::Product(ys)) => refines(xs, ys),
        _ => false,
    };
    if direct {
        return true;
    }
    if let Tree::Product(xs) = a {
        for (i, x) in xs.iter().enumerate() {
            if let Tree::Sum(terms) = x {
                let distributed = TreeShape::sum(
                    terms
                        .iter()
                        .map(|t| {
                            let mut factors: Vec<TreeShape> =
                                xs.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, c)| c.clone()).collect();
                            factors.push(t.clone());
                            TreeShape::product(factors)
                        })
                        .collect(),
                );
                if specializes(&distributed, b) {
                    return true;
                }
            }
        }
    }
    false
}

fn injective_match(xs: &[TreeShape], ys: &[TreeShape]) -> bool {
    fn go(xs: &[TreeShape], ys: &[TreeShape], used: &mut Vec<bool>, i: usize) -> bool {
        if i == xs.len() {
            return true;
        }
        for j in 0..ys.len() {
            if !used[j] && specializes(&xs[i], &ys[j]) {
                used[j] = true;
                if go(xs, ys, used, i + 1) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    go(xs, ys, &mut vec![false; ys.len()], 0)
}

/// Each factor block of `ys` must be a union of factors of `xs`, and the
/// grouped factors must specialize the block.
fn refines(xs: &[TreeShape], ys: &[TreeShape]) -> bool {
    ys.iter().all(|y| {
        let m = y.qubit_set();
        let inside: Vec<TreeShape> = xs.iter().filter(|x| x.qubit_set() & m == x.qubit_set()).cloned().collect();
        let covered = inside.iter().fold(0, |acc, x| acc | x.qubit_set());
        if covered != m {
            return false;
        }
        let grouped = if inside.len() == 1 { inside.into_iter().next().unwrap() } else { TreeShape::product(inside) };
        specializes(&grouped, y)
    })
}

/// Shapes not specialized by any other shape in the list; among mutually
/// specializing shapes the earliest is kept. Order is preserved.
pub fn maximal_shapes(shapes: &[TreeShape]) -> Vec<TreeShape> {
    let mut keep = vec![true; shapes.len()];
    for i in 0..shapes.len() {
        for j in 0..shapes.len() {
            if i == j || !keep[j] {
                continue;
            }
            if specializes(&shapes[i], &shapes[j]) && (j < i || !specializes(&shapes[j], &shapes[i])) {
                keep[i] = false;
                break;
            }
        }
    }
    shapes.iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s.clone()).collect()
}
