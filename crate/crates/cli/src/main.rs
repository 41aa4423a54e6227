//! `treesize` command-line front end. Every verb prints one JSON document.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use treesize::abcd::{self, IrreducibilityVerdict, VerdictFamily};
use treesize::approx::{self, OptConfig};
use treesize::slocc;
use treesize::state::{self, complex_to_json, PureState};
use treesize::tree::{self, print_braket, tree_to_json};
use treesize::treesize::{self as ts, OracleBudget};
use treesize::{mixed, DensityMatrix, Error, TreeNode};

#[derive(Parser)]
#[command(name = "treesize", version, about = "Tree size of two- to four-qubit states")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone, Default)]
struct Input {
    /// Bra-ket formula, e.g. "(|001>+|010>+|100>)/sqrt3".
    #[arg(long, group = "source")]
    ket: Option<String>,
    /// State JSON {"n":..,"amps":[[re,im],..]} (density JSON for `witness`).
    #[arg(long, group = "source")]
    state: Option<String>,
    /// Tree JSON with "leaf"/"sum"/"prod" nodes.
    #[arg(long, group = "source")]
    tree: Option<String>,
    /// Read the input from a file (JSON or bra-ket, detected by content).
    #[arg(long, group = "source")]
    file: Option<String>,
}

#[derive(Subcommand)]
enum Verb {
    /// Bra-ket text to tree JSON.
    Parse(Input),
    /// Tree (bra-ket or JSON) to normalized state JSON.
    Eval(Input),
    /// SLOCC class of a two- or three-qubit state.
    Classify(Input),
    /// Tree-size bounds and a witness tree.
    Treesize(Input),
    /// Smallest tree found for the state.
    Decompose(Input),
    /// A|BCD irreducibility verdict for a four-qubit state.
    Irreducible(Input),
    /// Approximate tree size at overlap 1 - eps.
    EpsilonTs {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Witness expectation from a density matrix or a measured companion value.
    Witness {
        #[command(flatten)]
        input: Input,
        #[arg(long, allow_negative_numbers = true)]
        from_wprime: Option<f64>,
    },
    /// Class and tree size of the generalized Werner state at mixing p.
    Werner {
        #[arg(long)]
        p: f64,
    },
    /// Brute-force tree size by optimizing over every shape.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 8)]
        max_leaves: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
}

/// Failures that never reach the library.
enum CliError {
    Input(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = Result<T, CliError>;

enum Raw {
    Ket(String),
    Json(Value),
}

fn read_raw(input: &Input) -> CliResult<Raw> {
    let json_text = |s: &str| -> CliResult<Raw> {
        serde_json::from_str(s).map(Raw::Json).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))
    };
    if let Some(k) = &input.ket {
        return Ok(Raw::Ket(k.clone()));
    }
    if let Some(s) = input.state.as_ref().or(input.tree.as_ref()) {
        return json_text(s);
    }
    let text = match &input.file {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?,
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf).map_err(|e| CliError::Input(format!("stdin: {e}")))?;
            buf
        }
    };
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Input("no input given".into()));
    }
    if text.starts_with('{') {
        json_text(text)
    } else {
        Ok(Raw::Ket(text.to_string()))
    }
}

fn is_tree_json(v: &Value) -> bool {
    ["leaf", "sum", "prod"].iter().any(|k| v.get(k).is_some())
}

/// Accepts a bare tree or the document printed by `parse`.
fn tree_json(v: &Value) -> Option<&Value> {
    if is_tree_json(v) {
        Some(v)
    } else {
        v.get("tree").filter(|t| is_tree_json(t))
    }
}

fn read_tree(input: &Input) -> CliResult<TreeNode> {
    match read_raw(input)? {
        Raw::Ket(k) => Ok(tree::parse_braket(&k)?),
        Raw::Json(v) => match tree_json(&v) {
            Some(t) => Ok(tree::tree_from_json(t)?),
            None => Err(CliError::Input("expected a tree, got another JSON document".into())),
        },
    }
}

fn read_state(input: &Input) -> CliResult<PureState> {
    match read_raw(input)? {
        Raw::Ket(k) => Ok(tree::parse_braket(&k)?.evaluate()?),
        Raw::Json(v) => match tree_json(&v) {
            Some(t) => Ok(tree::tree_from_json(t)?.evaluate()?),
            None => Ok(state::state_from_json(&v)?),
        },
    }
}

fn classify(s: &PureState) -> CliResult<Value> {
    match s.n_qubits() {
        2 => Ok(json!({ "class": slocc::classify2(s)?.to_string() })),
        3 => {
            let c = slocc::classify3(s)?;
            let mut v = json!({
                "class": c.kind.name(),
                "condition": c.evidence.condition.label(),
                "partition": c.evidence.partition,
                "borderline": c.borderline,
            });
            if let slocc::Kind3::Biseparable(q) = c.kind {
                v["separable_qubit"] = json!(q);
            }
            Ok(v)
        }
        n => Err(CliError::Input(format!("classify supports 2 or 3 qubits, got {n}"))),
    }
}

fn verdict_json(v: &IrreducibilityVerdict) -> Value {
    let family = match v.family {
        VerdictFamily::Case1 => json!("Case1"),
        VerdictFamily::Case2 => json!("Case2"),
        VerdictFamily::NotApplicable => Value::Null,
    };
    let witness = v.witness.map(|w| {
        json!({
            "partition_qubit": w.partition_qubit,
            "ilo": {
                "qubit": w.ilo.qubit,
                "matrix": w.ilo.m.iter().map(|row| row.iter().map(|&z| complex_to_json(z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            },
            "lambda_star": complex_to_json(w.lambda_star),
            "escaped_class": w.escaped_class.name(),
        })
    });
    json!({ "irreducible": v.irreducible, "family": family, "witness": witness })
}

fn run(verb: Verb) -> CliResult<Value> {
    match verb {
        Verb::Parse(input) => {
            let t = match read_raw(&input)? {
                Raw::Ket(k) => tree::parse_braket(&k)?,
                Raw::Json(_) => return Err(CliError::Input("parse expects bra-ket text".into())),
            };
            Ok(json!({ "tree": tree_to_json(&t), "size": t.size(), "braket": print_braket(&t) }))
        }
        Verb::Eval(input) => Ok(state::state_to_json(&read_tree(&input)?.evaluate()?)),
        Verb::Classify(input) => classify(&read_state(&input)?),
        Verb::Treesize(input) => Ok(ts::ts(&read_state(&input)?)?.to_json()),
        Verb::Decompose(input) => {
            let r = ts::ts(&read_state(&input)?)?;
            Ok(json!({
                "size": r.upper,
                "exact": r.exact,
                "tree": print_braket(&r.tree),
                "tree_json": tree_to_json(&r.tree),
            }))
        }
        Verb::Irreducible(input) => Ok(verdict_json(&abcd::is_irreducible(&read_state(&input)?)?)),
        Verb::EpsilonTs { input, eps, seed } => {
            let s = read_state(&input)?;
            Ok(approx::epsilon_ts_report(&s, eps, &OptConfig::default(), seed)?.to_json())
        }
        Verb::Witness { input, from_wprime } => {
            let report = match from_wprime {
                Some(w) => approx::witness_from_wprime(w),
                None => {
                    let rho = match read_raw(&input)? {
                        Raw::Json(v) if v.get("mat").is_some() => state::density_from_json(&v)?,
                        Raw::Json(v) => DensityMatrix::from_pure(&state::state_from_json(&v)?),
                        Raw::Ket(k) => DensityMatrix::from_pure(&tree::parse_braket(&k)?.evaluate()?),
                    };
                    approx::witness_eval(&rho)?
                }
            };
            Ok(report.to_json())
        }
        Verb::Werner { p } => Ok(mixed::werner_ts(p)?.to_json()),
        Verb::Oracle { input, max_leaves, seed, restarts } => {
            let s = read_state(&input)?;
            let budget = OracleBudget { restarts, seed, ..OracleBudget::default() };
            Ok(ts::ts_oracle(&s, max_leaves, &budget)?.to_json())
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Lib(Error::Degenerate(_) | Error::BudgetExceeded(_) | Error::BudgetTooLarge { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = match &e {
                CliError::Input(m) => m.clone(),
                CliError::Lib(err) => err.to_string(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
