use serde_json::{json, Value};

use super::{LeafAmp, Tree, TreeNode};
use crate::error::{Error, Result};
use crate::state::{complex_from_json, complex_to_json};

/// `{"leaf": {"qubit": q, "a": [re, im], "b": [re, im]}}`,
/// `{"sum": [...]}` or `{"prod": [...]}`.
pub fn tree_to_json(t: &TreeNode) -> Value {
    match t {
        Tree::Leaf { qubit, amp } => json!({
            "leaf": { "qubit": qubit, "a": complex_to_json(amp.a), "b": complex_to_json(amp.b) }
        }),
        Tree::Sum(c) => json!({ "sum": c.iter().map(tree_to_json).collect::<Vec<_>>() }),
        Tree::Product(c) => json!({ "prod": c.iter().map(tree_to_json).collect::<Vec<_>>() }),
    }
}

/// Inverse of [`tree_to_json`]; the result is canonicalized and validated.
pub fn tree_from_json(v: &Value) -> Result<TreeNode> {
    let t = node_from_json(v)?.canonicalize();
    t.validate()?;
    Ok(t)
}

fn node_from_json(v: &Value) -> Result<TreeNode> {
    let obj = v
        .as_object()
        .filter(|o| o.len() == 1)
        .ok_or_else(|| Error::Json(format!("expected a single-key tree object, got {v}")))?;
    let (tag, body) = obj.iter().next().unwrap();
    match tag.as_str() {
        "leaf" => {
            let qubit = body
                .get("qubit")
                .and_then(Value::as_u64)
                .filter(|&q| (1..=16).contains(&q))
                .ok_or_else(|| Error::Json("leaf needs a positive integer \"qubit\"".into()))?
                as usize;
            let a = complex_from_json(body.get("a").unwrap_or(&Value::Null))?;
            let b = complex_from_json(body.get("b").unwrap_or(&Value::Null))?;
            Ok(Tree::Leaf { qubit, amp: LeafAmp::new(a, b) })
        }
        "sum" | "prod" => {
            let children = body
                .as_array()
                .ok_or_else(|| Error::Json(format!("\"{tag}\" must hold an array")))?
                .iter()
                .map(node_from_json)
                .collect::<Result<Vec<_>>>()?;
            if children.is_empty() {
                return Err(Error::Json(format!("empty \"{tag}\"")));
            }
            Ok(if tag == "sum" { Tree::Sum(children) } else { Tree::Product(children) })
        }
        other => Err(Error::Json(format!("unknown tree tag \"{other}\""))),
    }
}
