//! Maximizes `|⟨target|tree⟩|²/‖tree‖²` over the leaf vectors of a fixed
//! shape.
//!
//! Each leaf appears once, so the evaluated vector is affine in that leaf:
//! `ψ = a·u + b·v + w`, where `u`, `v` are the leaf's basis kets tensored
//! with its environment (the product siblings along the path to the root).
//! Sweeps maximize the overlap exactly in one leaf at a time; the optimum of
//! the ratio over `(a, b)` with the `w` coefficient pinned to one is the
//! projection of the target on `span(u, v, w)`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::par;
use crate::state::{complex_gaussian, PureState};
use crate::tree::{LeafAmp, QubitSet, Tree, TreeNode, TreeShape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Converged once the objective gains less than `min_improvement` over
    /// this many sweeps.
    pub patience: usize,
    pub min_improvement: f64,
    /// Stop as soon as a restart reaches this overlap.
    pub stop_at: Option<f64>,
    /// Restarts run in batches of this size; early stopping is checked
    /// between batches so results do not depend on the thread count.
    pub batch: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig { restarts: 64, max_sweeps: 3000, patience: 50, min_improvement: 1e-12, stop_at: None, batch: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_overlap: f64,
    pub tree: TreeNode,
    pub restarts_used: usize,
    pub converged: bool,
}

/// Best overlap of `target` with any tree of `shape`, from `restarts`
/// random starts.
pub fn max_overlap(target: &PureState, shape: &TreeShape, seed: u64, restarts: usize) -> Result<OptResult> {
    max_overlap_with(target, shape, &OptConfig { restarts, ..OptConfig::default() }, seed)
}

pub fn max_overlap_with(target: &PureState, shape: &TreeShape, cfg: &OptConfig, seed: u64) -> Result<OptResult> {
    let plan = Plan::compile(shape, target.n_qubits())?;
    if cfg.restarts == 0 {
        return Err(Error::BudgetExceeded("zero restarts requested".into()));
    }
    let batch = cfg.batch.max(1);
    let mut best: Option<RunResult> = None;
    let mut used = 0;
    while used < cfg.restarts {
        let end = (used + batch).min(cfg.restarts);
        let runs = par::map_indices(used..end, |r| plan.run(target.amps(), cfg, restart_seed(seed, r)));
        used = end;
        for run in runs {
            if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                best = Some(run);
            }
        }
        if let (Some(stop), Some(b)) = (cfg.stop_at, &best) {
            if b.objective >= stop {
                break;
            }
        }
    }
    let best = best.expect("at least one restart");
    let tree = plan.to_tree(&best.leaves);
    let (_, v) = tree.evaluate_raw()?;
    let best_overlap = crate::state::overlap2_raw(&v, target.amps());
    Ok(OptResult { best_overlap, tree, restarts_used: used, converged: best.converged })
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    // splitmix64 of the pair
    let mut z = seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Vec16 = [C64; 16];
/// For each index of a combined vector: indices into the two parts.
type PairTable = Vec<(u8, u8)>;

#[derive(Debug, Clone)]
enum Kind {
    Leaf(usize),
    Sum,
    Prod,
}

#[derive(Debug, Clone)]
struct Node {
    kind: Kind,
    mask: QubitSet,
    children: Vec<usize>,
    parent: Option<usize>,
    /// Product nodes: table `i` merges children `0..=i` with child `i + 1`.
    tables: Vec<PairTable>,
}

#[derive(Debug, Clone)]
struct LeafEnv {
    /// Sibling subtrees whose product is the environment, each with the table
    /// merging the running environment with it.
    steps: Vec<(usize, PairTable)>,
    /// Maps full-register indices to (leaf bit, environment index).
    split: PairTable,
}

#[derive(Debug, Clone)]
struct Plan {
    nodes: Vec<Node>,
    leaf_node: Vec<usize>,
    envs: Vec<LeafEnv>,
    dim: usize,
    shape: TreeShape,
}

struct RunResult {
    objective: f64,
    leaves: Vec<[C64; 2]>,
    converged: bool,
}

fn pair_table(ma: QubitSet, mb: QubitSet) -> PairTable {
    let union = ma | mb;
    let k = union.count_ones() as usize;
    let qubits: Vec<u16> = (0..16).filter(|b| union & (1 << b) != 0).collect();
    (0..1usize << k)
        .map(|idx| {
            let (mut ia, mut ib) = (0u8, 0u8);
            for (p, &b) in qubits.iter().enumerate() {
                let bit = ((idx >> (k - 1 - p)) & 1) as u8;
                if ma & (1 << b) != 0 {
                    ia = (ia << 1) | bit;
                } else {
                    ib = (ib << 1) | bit;
                }
            }
            (ia, ib)
        })
        .collect()
}

fn merge(a: &Vec16, b: &Vec16, table: &PairTable, out: &mut Vec16) {
    for (o, &(i, j)) in out.iter_mut().zip(table) {
        *o = a[i as usize] * b[j as usize];
    }
}

fn dim_of(mask: QubitSet) -> usize {
    1 << mask.count_ones()
}

impl Plan {
    fn compile(shape: &TreeShape, n: usize) -> Result<Plan> {
        let full: QubitSet = ((1u32 << n) - 1) as QubitSet;
        if n == 0 || n > 4 || shape.qubit_set() != full {
            return Err(Error::QubitCoverage(format!("shape does not cover qubits 1..={n}")));
        }
        shape.validate()?;
        let mut nodes = Vec::new();
        let mut leaf_node = Vec::new();
        fn add(t: &TreeShape, nodes: &mut Vec<Node>, leaf_node: &mut Vec<usize>) -> usize {
            let (kind, children) = match t {
                Tree::Leaf { .. } => {
                    leaf_node.push(nodes.len());
                    (Kind::Leaf(leaf_node.len() - 1), Vec::new())
                }
                Tree::Sum(c) => (Kind::Sum, c.iter().map(|x| add(x, nodes, leaf_node)).collect()),
                Tree::Product(c) => (Kind::Prod, c.iter().map(|x| add(x, nodes, leaf_node)).collect()),
            };
            let mut tables = Vec::new();
            if matches!(kind, Kind::Prod) {
                let mut acc = nodes[children[0]].mask;
                for &c in &children[1..] {
                    tables.push(pair_table(acc, nodes[c].mask));
                    acc |= nodes[c].mask;
                }
            }
            let id = nodes.len();
            for &c in &children {
                nodes[c].parent = Some(id);
            }
            nodes.push(Node { kind, mask: t.qubit_set(), children, parent: None, tables });
            id
        }
        add(shape, &mut nodes, &mut leaf_node);

        let envs = leaf_node
            .iter()
            .map(|&ln| {
                let mut steps = Vec::new();
                let mut env_mask: QubitSet = 0;
                let (mut child, mut cur) = (ln, nodes[ln].parent);
                while let Some(p) = cur {
                    if matches!(nodes[p].kind, Kind::Prod) {
                        for &s in nodes[p].children.iter().filter(|&&s| s != child) {
                            steps.push((s, pair_table(env_mask, nodes[s].mask)));
                            env_mask |= nodes[s].mask;
                        }
                    }
                    child = p;
                    cur = nodes[p].parent;
                }
                LeafEnv { steps, split: pair_table(nodes[ln].mask, env_mask) }
            })
            .collect();
        Ok(Plan { nodes, leaf_node, envs, dim: 1 << n, shape: shape.clone() })
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    fn eval_node(&self, id: usize, leaves: &[[C64; 2]], vals: &mut [Vec16]) {
        let node = &self.nodes[id];
        let mut out = [ZERO; 16];
        match node.kind {
            Kind::Leaf(i) => {
                out[0] = leaves[i][0];
                out[1] = leaves[i][1];
            }
            Kind::Sum => {
                let d = dim_of(node.mask);
                for &c in &node.children {
                    for k in 0..d {
                        out[k] += vals[c][k];
                    }
                }
            }
            Kind::Prod => {
                let mut acc = vals[node.children[0]];
                for (i, &c) in node.children[1..].iter().enumerate() {
                    merge(&acc, &vals[c], &node.tables[i], &mut out);
                    acc = out;
                }
                out = acc;
            }
        }
        vals[id] = out;
    }

    fn eval_all(&self, leaves: &[[C64; 2]], vals: &mut [Vec16]) {
        for id in 0..self.nodes.len() {
            self.eval_node(id, leaves, vals);
        }
    }

    fn eval_path(&self, leaf: usize, leaves: &[[C64; 2]], vals: &mut [Vec16]) {
        let mut cur = Some(self.leaf_node[leaf]);
        while let Some(id) = cur {
            self.eval_node(id, leaves, vals);
            cur = self.nodes[id].parent;
        }
    }

    fn environment(&self, leaf: usize, vals: &[Vec16]) -> Vec16 {
        let mut env = [ZERO; 16];
        env[0] = ONE;
        let mut out = [ZERO; 16];
        for (s, table) in &self.envs[leaf].steps {
            merge(&env, &vals[*s], table, &mut out);
            env = out;
        }
        env
    }

    fn scale_subtree(&self, id: usize, s: C64, leaves: &mut [[C64; 2]]) {
        let node = &self.nodes[id];
        match node.kind {
            Kind::Leaf(i) => {
                leaves[i][0] *= s;
                leaves[i][1] *= s;
            }
            Kind::Prod => self.scale_subtree(node.children[0], s, leaves),
            Kind::Sum => node.children.iter().for_each(|&c| self.scale_subtree(c, s, leaves)),
        }
    }

    /// Equalizes factor norms under every product and normalizes the root.
    fn rebalance(&self, leaves: &mut [[C64; 2]], vals: &mut [Vec16]) {
        for id in 0..self.nodes.len() {
            let node = &self.nodes[id];
            if !matches!(node.kind, Kind::Prod) {
                continue;
            }
            let norms: Vec<f64> =
                node.children.iter().map(|&c| vec_norm(&vals[c], dim_of(self.nodes[c].mask))).collect();
            if norms.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                continue;
            }
            let log_mean = norms.iter().map(|x| x.ln()).sum::<f64>() / norms.len() as f64;
            for (&c, &x) in node.children.iter().zip(&norms) {
                self.scale_subtree(c, C64::new((log_mean - x.ln()).exp(), 0.0), leaves);
            }
            self.eval_all(leaves, vals);
        }
        let r = vec_norm(&vals[self.root()], self.dim);
        if r > 0.0 && r.is_finite() {
            self.scale_subtree(self.root(), C64::new(1.0 / r, 0.0), leaves);
        }
        self.eval_all(leaves, vals);
    }

    /// Rotates the global phase so the overlap with the target is real.
    fn align_phase(&self, target: &[C64], leaves: &mut [[C64; 2]], vals: &mut [Vec16]) {
        let psi = &vals[self.root()];
        let ip: C64 = psi.iter().zip(target).map(|(p, t)| t.conj() * p).sum();
        if ip.norm() > 0.0 && ip.is_finite() {
            self.scale_subtree(self.root(), ip.conj() / ip.norm(), leaves);
            self.eval_all(leaves, vals);
        }
    }

    fn objective(&self, target: &[C64], vals: &[Vec16]) -> f64 {
        let psi = &vals[self.root()];
        let nn: f64 = psi[..self.dim].iter().map(|z| z.norm_sqr()).sum();
        if !(nn > 0.0) || !nn.is_finite() {
            return 0.0;
        }
        let ip: C64 = target.iter().zip(psi.iter()).map(|(t, p)| t.conj() * p).sum();
        (ip.norm_sqr() / nn).min(1.0)
    }

    /// Exact maximization over one leaf.
    fn update_leaf(&self, leaf: usize, target: &[C64], leaves: &mut [[C64; 2]], vals: &mut [Vec16]) {
        let env = self.environment(leaf, vals);
        let split = &self.envs[leaf].split;
        let psi = vals[self.root()];
        let mut u = [ZERO; 16];
        let mut v = [ZERO; 16];
        for (idx, &(lb, ei)) in split.iter().enumerate() {
            if lb == 0 {
                u[idx] = env[ei as usize];
            } else {
                v[idx] = env[ei as usize];
            }
        }
        let e2: f64 = u[..self.dim].iter().map(|z| z.norm_sqr()).sum();
        if !(e2 > 1e-300) || !e2.is_finite() {
            return;
        }
        let [a, b] = leaves[leaf];
        let dot = |x: &Vec16, y: &[C64]| -> C64 { x.iter().zip(y).map(|(p, q)| p.conj() * q).sum() };
        let mut w = [ZERO; 16];
        for k in 0..self.dim {
            w[k] = psi[k] - a * u[k] - b * v[k];
        }
        // w = α u + β v + w⊥
        let alpha = dot(&u, &w) / e2;
        let beta = dot(&v, &w) / e2;
        let mut wp = [ZERO; 16];
        for k in 0..self.dim {
            wp[k] = w[k] - alpha * u[k] - beta * v[k];
        }
        let gamma = wp[..self.dim].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let w_norm = w[..self.dim].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let en = e2.sqrt();
        let tu = dot(&u, target) / en;
        let tv = dot(&v, target) / en;
        let tau_norm = (tu.norm_sqr() + tv.norm_sqr()).sqrt();
        let (za, zb) = if gamma <= 1e-13 * w_norm.max(en * (a.norm() + b.norm())) {
            // w lies in span(u, v): only the direction of (a', b') matters
            let cur = ((a + alpha).norm_sqr() + (b + beta).norm_sqr()).sqrt();
            if tau_norm == 0.0 {
                return;
            }
            let s = if cur > 0.0 { cur * en / tau_norm } else { 1.0 };
            (tu * s, tv * s)
        } else {
            let tw = dot(&wp, target) / gamma;
            let full = (tau_norm * tau_norm + tw.norm_sqr()).sqrt();
            if full == 0.0 {
                return;
            }
            let floor = 1e-8 * full;
            let tw = if tw.norm() >= floor {
                tw
            } else if tw.norm() > 0.0 {
                tw / tw.norm() * floor
            } else {
                C64::new(floor, 0.0)
            };
            let s = gamma / tw;
            (tu * s, tv * s)
        };
        let na = za / en - alpha;
        let nb = zb / en - beta;
        if !(na.is_finite() && nb.is_finite()) {
            return;
        }
        leaves[leaf] = [na, nb];
        self.eval_path(leaf, leaves, vals);
    }

    fn run(&self, target: &[C64], cfg: &OptConfig, seed: u64) -> RunResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut leaves: Vec<[C64; 2]> =
            (0..self.leaf_node.len()).map(|_| [complex_gaussian(&mut rng), complex_gaussian(&mut rng)]).collect();
        let mut vals = vec![[ZERO; 16]; self.nodes.len()];
        self.eval_all(&leaves, &mut vals);
        self.rebalance(&mut leaves, &mut vals);
        self.align_phase(target, &mut leaves, &mut vals);
        let mut history = vec![self.objective(target, &vals)];
        let mut converged = false;
        // extrapolation step along the last sweep's displacement; ALS alone
        // crawls through the flat valleys near degenerate limits
        let mut step = 1.0;
        let mut trial_leaves = leaves.clone();
        let mut trial_vals = vals.clone();
        for sweep in 1..=cfg.max_sweeps {
            let before = leaves.clone();
            for leaf in 0..self.leaf_node.len() {
                self.update_leaf(leaf, target, &mut leaves, &mut vals);
            }
            self.rebalance(&mut leaves, &mut vals);
            self.align_phase(target, &mut leaves, &mut vals);
            let mut obj = self.objective(target, &vals);
            if sweep > 2 {
                for (t, (x, b)) in trial_leaves.iter_mut().zip(leaves.iter().zip(&before)) {
                    for k in 0..2 {
                        t[k] = x[k] + (x[k] - b[k]) * step;
                    }
                }
                self.eval_all(&trial_leaves, &mut trial_vals);
                self.rebalance(&mut trial_leaves, &mut trial_vals);
                self.align_phase(target, &mut trial_leaves, &mut trial_vals);
                let trial = self.objective(target, &trial_vals);
                if trial > obj {
                    std::mem::swap(&mut leaves, &mut trial_leaves);
                    std::mem::swap(&mut vals, &mut trial_vals);
                    obj = trial;
                    step = (step * 1.5).min(1e3);
                } else {
                    step = (step * 0.5).max(0.25);
                }
            }
            history.push(obj);
            if cfg.stop_at.is_some_and(|s| obj >= s) || obj >= 1.0 - 1e-15 {
                converged = true;
                break;
            }
            if sweep >= cfg.patience && obj - history[sweep - cfg.patience] < cfg.min_improvement {
                converged = true;
                break;
            }
        }
        let objective = *history.last().expect("initial objective recorded");
        RunResult { objective, leaves, converged }
    }

    fn to_tree(&self, leaves: &[[C64; 2]]) -> TreeNode {
        let mut i = 0;
        self.shape.map_leaves(&mut |q, _| {
            let l = leaves[i];
            i += 1;
            (q, LeafAmp::new(l[0], l[1]))
        })
    }
}

fn vec_norm(v: &Vec16, d: usize) -> f64 {
    v[..d].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::named;
    use crate::tree::catalog_family;

    fn quick(restarts: usize) -> OptConfig {
        OptConfig { restarts, ..OptConfig::default() }
    }

    #[test]
    fn pair_table_orders_big_endian() {
        // qubit 1 alone with qubits {2, 3}
        let t = pair_table(0b001, 0b110);
        assert_eq!(t[0b101], (1, 0b01));
        // qubits {1, 3} with {2}
        let t = pair_table(0b101, 0b010);
        assert_eq!(t[0b011], (0b01, 1));
        assert_eq!(t[0b110], (0b10, 1));
    }

    #[test]
    fn plan_evaluates_like_the_tree() {
        let shape = catalog_family(3, "T_W").unwrap()[0].clone();
        let plan = Plan::compile(&shape, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let leaves: Vec<[C64; 2]> =
            (0..shape.size()).map(|_| [complex_gaussian(&mut rng), complex_gaussian(&mut rng)]).collect();
        let mut vals = vec![[ZERO; 16]; plan.nodes.len()];
        plan.eval_all(&leaves, &mut vals);
        let (_, want) = plan.to_tree(&leaves).evaluate_raw().unwrap();
        for k in 0..8 {
            assert!((vals[plan.root()][k] - want[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn representable_targets_are_reached() {
        let shape = catalog_family(3, "T_GHZ").unwrap()[0].clone();
        let r = max_overlap_with(&named::ghz3(), &shape, &quick(8), 1).unwrap();
        assert!(r.best_overlap > 1.0 - 1e-8, "{}", r.best_overlap);
        let w_shape = catalog_family(3, "T_W").unwrap()[0].clone();
        let r = max_overlap_with(&named::w3(), &w_shape, &quick(8), 1).unwrap();
        assert!(r.best_overlap > 1.0 - 1e-8, "{}", r.best_overlap);
    }

    #[test]
    fn random_tree_of_the_same_shape_is_reached() {
        let shape = catalog_family(3, "T_GHZ").unwrap()[0].clone();
        let plan = Plan::compile(&shape, 3).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let leaves: Vec<[C64; 2]> =
                (0..shape.size()).map(|_| [complex_gaussian(&mut rng), complex_gaussian(&mut rng)]).collect();
            let target = plan.to_tree(&leaves).evaluate().unwrap();
            let r = max_overlap_with(&target, &shape, &quick(16), seed).unwrap();
            assert!(r.best_overlap > 1.0 - 1e-8, "{}", r.best_overlap);
        }
    }

    #[test]
    fn w_against_biseparable_is_two_thirds() {
        for shape in catalog_family(3, "T_B").unwrap() {
            let r = max_overlap_with(&named::w3(), &shape, &quick(16), 7).unwrap();
            assert!((r.best_overlap - 2.0 / 3.0).abs() < 1e-6, "{}", r.best_overlap);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let shape = catalog_family(3, "T_B").unwrap()[0].clone();
        let a = max_overlap_with(&named::w3(), &shape, &quick(4), 11).unwrap();
        let b = max_overlap_with(&named::w3(), &shape, &quick(4), 11).unwrap();
        assert_eq!(a, b);
    }
}
