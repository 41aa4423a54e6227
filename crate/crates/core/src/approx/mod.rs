//! ε-approximate tree size, the closed-form overlap bounds around the
//! maximal four-qubit state, and its tree-size witness.

mod bounds;
mod optimizer;
mod witness;

pub use bounds::{biseparable_overlap_max, f_bounds, FBounds};
pub use optimizer::{max_overlap, max_overlap_with, OptConfig, OptResult};
pub use witness::{witness_eval, witness_from_wprime, WitnessReport, TS_FLOOR};

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::state::{self, PureState};
use crate::tree::{self, TreeShape};
use crate::treesize;

/// Qubit permutations (as `perm[k-1]` = new position of qubit `k`) that leave
/// the state unchanged up to a phase.
pub fn symmetries(target: &PureState) -> Vec<Vec<usize>> {
    let n = target.n_qubits();
    permutations(n)
        .into_iter()
        .filter(|p| {
            state::permute_qubits(target, p).is_ok_and(|s| state::overlap2(&s, target).unwrap_or(0.0) > 1.0 - 1e-12)
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (1..=n).collect(), &mut Vec::new(), &mut out);
    out
}

/// One shape per orbit of the symmetry group; shapes in the same orbit have
/// the same best overlap with a symmetric target.
pub fn orbit_representatives(shapes: Vec<TreeShape>, symmetries: &[Vec<usize>]) -> Vec<TreeShape> {
    let mut seen = std::collections::HashSet::new();
    shapes
        .into_iter()
        .filter(|s| {
            let key = symmetries
                .iter()
                .map(|p| s.relabel(&|q| p[q - 1]).canonical_key())
                .min()
                .unwrap_or_else(|| s.canonical_key());
            seen.insert(key)
        })
        .collect()
}

/// Outcome of testing every shape up to one size.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub max_leaves: usize,
    pub shapes: usize,
    pub best_overlap: f64,
    pub best_shape: Option<TreeShape>,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub eps: f64,
    pub tree_size: usize,
    /// Exact tree size bound the scan started from.
    pub start: usize,
    pub levels: Vec<LevelReport>,
}

impl EpsilonReport {
    pub fn to_json(&self) -> Value {
        json!({
            "eps": self.eps,
            "epsilon_ts": self.tree_size,
            "levels": self.levels.iter().map(|l| json!({
                "max_leaves": l.max_leaves,
                "shapes": l.shapes,
                "best_overlap": l.best_overlap,
                "reached": l.reached,
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn epsilon_ts(target: &PureState, eps: f64, seed: u64) -> Result<usize> {
    Ok(epsilon_ts_report(target, eps, &OptConfig::default(), seed)?.tree_size)
}

/// Smallest `S` such that some shape with at most `S` leaves comes within
/// overlap `1 − eps` of the target.
///
/// Sizes are scanned downward from the exact-construction bound, where the
/// answer is known to fit; since a pool of larger size contains every
/// smaller shape, the first size that fails settles the answer.
pub fn epsilon_ts_report(target: &PureState, eps: f64, cfg: &OptConfig, seed: u64) -> Result<EpsilonReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParams(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n = target.n_qubits();
    let start = treesize::ts(target)?.upper;
    let goal = 1.0 - eps;
    let syms = symmetries(target);
    let cfg = OptConfig { stop_at: Some(goal), ..*cfg };
    let mut cache: HashMap<String, f64> = HashMap::new();
    let mut levels = Vec::new();
    let mut size = start;
    while size > n {
        let level = best_at_level(target, size - 1, &cfg, seed, &syms, goal, &mut cache)?;
        let reached = level.reached;
        levels.push(level);
        if !reached {
            break;
        }
        size -= 1;
    }
    Ok(EpsilonReport { eps, tree_size: size, start, levels })
}

/// Best overlap over every shape with at most `max_leaves` leaves (pruned
/// to maximal shapes and symmetry orbits), stopping once `goal` is reached.
pub fn best_overlap_up_to(target: &PureState, max_leaves: usize, cfg: &OptConfig, seed: u64) -> Result<LevelReport> {
    let syms = symmetries(target);
    best_at_level(target, max_leaves, cfg, seed, &syms, cfg.stop_at.unwrap_or(f64::INFINITY), &mut HashMap::new())
}

fn best_at_level(
    target: &PureState,
    max_leaves: usize,
    cfg: &OptConfig,
    seed: u64,
    syms: &[Vec<usize>],
    goal: f64,
    cache: &mut HashMap<String, f64>,
) -> Result<LevelReport> {
    let n = target.n_qubits();
    let all = tree::enumerate_shapes(n, max_leaves)?;
    let mut pool = orbit_representatives(tree::maximal_shapes(&all), syms);
    pool.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.canonical_key().cmp(&b.canonical_key())));
    let mut report =
        LevelReport { max_leaves, shapes: pool.len(), best_overlap: 0.0, best_shape: None, reached: false };
    for shape in pool {
        let key = shape.signature();
        let o = match cache.get(&key) {
            Some(&o) => o,
            None => {
                let shape_seed = seed ^ hash_shape(&shape);
                let o = max_overlap_with(target, &shape, cfg, shape_seed)?.best_overlap;
                cache.insert(key, o);
                o
            }
        };
        if o > report.best_overlap {
            report.best_overlap = o;
            report.best_shape = Some(shape.clone());
        }
        if o >= goal {
            report.reached = true;
            break;
        }
    }
    Ok(report)
}

/// Stable per-shape seed offset (FNV-1a of the signature).
fn hash_shape(shape: &TreeShape) -> u64 {
    shape.signature().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
