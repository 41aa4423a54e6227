//! Bra-ket formulas.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := item+
//! item   := ket ['@' list] | '(' expr ')' ['@' list] | coeff | '/' atom | '*'
//! ket    := '|' [01]+ '>'
//! coeff  := number ['i'] | 'i' | 'sqrt' atom | '(' cexpr ')'
//! list   := '[' int (',' int)* ']'
//! ```
//!
//! Inside a term, factors without a qubit list take the lowest qubits not
//! claimed elsewhere in the term, in order of appearance; a list maps the
//! factor's qubits (in ascending order) to the given positions.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use super::{qubits_in, LeafAmp, QubitSet, Tree, TreeNode};
use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};

pub fn parse_braket(text: &str) -> Result<TreeNode> {
    let mut p = Parser { s: text.chars().collect(), byte_pos: Vec::new(), pos: 0 };
    p.byte_pos = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len())).collect();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.s.len() {
        return Err(p.err("unexpected character"));
    }
    let t = build_expr(&e)?.canonicalize();
    t.validate()?;
    Ok(t)
}

// ---------- syntax ----------

#[derive(Debug)]
struct Expr {
    terms: Vec<Term>,
    pos: usize,
}

#[derive(Debug)]
struct Term {
    coeff: C64,
    factors: Vec<Factor>,
}

#[derive(Debug)]
enum FactorBody {
    Ket(Vec<bool>),
    Group(Expr),
}

#[derive(Debug)]
struct Factor {
    body: FactorBody,
    qubits: Option<Vec<usize>>,
    pos: usize,
}

struct Parser {
    s: Vec<char>,
    byte_pos: Vec<usize>,
    pos: usize,
}

impl Parser {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.byte_pos[self.pos.min(self.s.len())], msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn starts_with(&mut self, word: &str) -> bool {
        self.skip_ws();
        let w: Vec<char> = word.chars().collect();
        self.s.len() >= self.pos + w.len() && self.s[self.pos..self.pos + w.len()] == w[..]
    }

    fn expr(&mut self) -> Result<Expr> {
        let pos = self.pos;
        let mut terms = Vec::new();
        let mut sign = if self.eat('-') {
            -ONE
        } else {
            self.eat('+');
            ONE
        };
        loop {
            let mut t = self.term()?;
            if sign != ONE {
                t.coeff *= sign;
            }
            terms.push(t);
            if self.eat('+') {
                sign = ONE;
            } else if self.eat('-') {
                sign = -ONE;
            } else {
                break;
            }
        }
        Ok(Expr { terms, pos })
    }

    fn term(&mut self) -> Result<Term> {
        let mut coeff = ONE;
        let mut factors = Vec::new();
        loop {
            match self.peek() {
                Some('|') => {
                    let fpos = self.pos;
                    let bits = self.ket()?;
                    let qubits = self.qubit_list()?;
                    factors.push(Factor { body: FactorBody::Ket(bits), qubits, pos: fpos });
                }
                Some('(') => {
                    let save = self.pos;
                    if let Some(c) = self.try_paren_coeff() {
                        coeff *= c;
                        continue;
                    }
                    self.pos = save;
                    let fpos = self.pos;
                    self.expect('(')?;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    let qubits = self.qubit_list()?;
                    factors.push(Factor { body: FactorBody::Group(inner), qubits, pos: fpos });
                }
                Some('/') => {
                    self.pos += 1;
                    let d = self.atom()?;
                    coeff = divide(coeff, d).ok_or_else(|| self.err("division by zero"))?;
                }
                Some('*') => {
                    self.pos += 1;
                }
                Some(c) if c.is_ascii_digit() || c == '.' || c == 'i' || c == 's' => {
                    coeff *= self.atom()?;
                }
                _ => break,
            }
        }
        if factors.is_empty() {
            return Err(self.err("expected a ket or a parenthesized expression"));
        }
        Ok(Term { coeff, factors })
    }

    fn ket(&mut self) -> Result<Vec<bool>> {
        self.expect('|')?;
        let mut bits = Vec::new();
        while let Some(&c) = self.s.get(self.pos) {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => break,
            }
            self.pos += 1;
        }
        if bits.is_empty() {
            return Err(self.err("empty ket"));
        }
        if self.s.get(self.pos) != Some(&'>') {
            return Err(self.err("expected '>' closing the ket"));
        }
        self.pos += 1;
        Ok(bits)
    }

    fn qubit_list(&mut self) -> Result<Option<Vec<usize>>> {
        if !self.eat('@') {
            return Ok(None);
        }
        self.expect('[')?;
        let mut list = Vec::new();
        loop {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let text: String = self.s[start..self.pos].iter().collect();
            let q: usize = text.parse().map_err(|_| self.err("expected a qubit index"))?;
            if q == 0 || q > 16 {
                self.pos = start;
                return Err(self.err("qubit index out of range"));
            }
            list.push(q);
            if !self.eat(',') {
                break;
            }
        }
        self.expect(']')?;
        Ok(Some(list))
    }

    /// `( cexpr )` when the parenthesis holds only a coefficient.
    fn try_paren_coeff(&mut self) -> Option<C64> {
        if !self.eat('(') {
            return None;
        }
        let c = self.coeff_expr().ok()?;
        if !self.eat(')') || self.peek() == Some('@') {
            return None;
        }
        Some(c)
    }

    fn coeff_expr(&mut self) -> Result<C64> {
        let mut acc = if self.eat('-') {
            -self.coeff_term()?
        } else {
            self.eat('+');
            self.coeff_term()?
        };
        loop {
            if self.eat('+') {
                acc += self.coeff_term()?;
            } else if self.eat('-') {
                acc -= self.coeff_term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn coeff_term(&mut self) -> Result<C64> {
        let mut acc = self.atom()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc *= self.atom()?;
                }
                Some('/') => {
                    self.pos += 1;
                    let d = self.atom()?;
                    acc = divide(acc, d).ok_or_else(|| self.err("division by zero"))?;
                }
                Some(c) if c.is_ascii_digit() || c == '.' || c == 'i' || c == 's' || c == '(' => {
                    acc *= self.atom()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn atom(&mut self) -> Result<C64> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let c = self.coeff_expr()?;
                self.expect(')')?;
                Ok(c)
            }
            Some('i') => {
                self.pos += 1;
                Ok(C64::new(0.0, 1.0))
            }
            Some('s') if self.starts_with("sqrt") => {
                self.pos += 4;
                let x = self.atom()?;
                Ok(x.sqrt())
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let x = self.number()?;
                if self.s.get(self.pos) == Some(&'i') {
                    self.pos += 1;
                    Ok(C64::new(0.0, x))
                } else {
                    Ok(C64::new(x, 0.0))
                }
            }
            _ => Err(self.err("expected a coefficient")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            while p.pos < p.s.len() && p.s[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.s.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.s.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.s.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text: String = self.s[start..self.pos].iter().collect();
        text.parse().map_err(|_| {
            self.pos = start;
            self.err("malformed number")
        })
    }
}

fn divide(a: C64, d: C64) -> Option<C64> {
    if d == ZERO {
        None
    } else if d.im == 0.0 {
        Some(C64::new(a.re / d.re, a.im / d.re))
    } else {
        Some(a / d)
    }
}

// ---------- tree construction ----------

fn coverage(pos: usize, msg: String) -> Error {
    Error::QubitCoverage(format!("{msg} (at position {pos})"))
}

fn build_expr(e: &Expr) -> Result<TreeNode> {
    let terms = e.terms.iter().map(build_term).collect::<Result<Vec<_>>>()?;
    let mask = terms[0].qubit_set();
    if terms.iter().any(|t| t.qubit_set() != mask) {
        return Err(coverage(e.pos, "terms of a sum act on different qubits".into()));
    }
    if terms.len() == 1 {
        return Ok(terms.into_iter().next().unwrap());
    }
    Ok(Tree::Sum(terms).canonicalize())
}

fn build_term(t: &Term) -> Result<TreeNode> {
    let built: Vec<(TreeNode, &Factor)> = t
        .factors
        .iter()
        .map(|f| {
            let tree = match &f.body {
                FactorBody::Ket(bits) => ket_tree(bits),
                FactorBody::Group(e) => build_expr(e)?,
            };
            Ok((tree, f))
        })
        .collect::<Result<_>>()?;

    let mut claimed: QubitSet = 0;
    for (tree, f) in &built {
        if let Some(list) = &f.qubits {
            let k = tree.qubit_set().count_ones() as usize;
            if list.len() != k {
                return Err(coverage(f.pos, format!("qubit list has {} entries for {k} qubits", list.len())));
            }
            for &q in list {
                let bit = 1 << (q - 1);
                if claimed & bit != 0 {
                    return Err(coverage(f.pos, format!("qubit {q} assigned twice")));
                }
                claimed |= bit;
            }
        }
    }

    let mut children = Vec::with_capacity(built.len());
    let mut next_free = 1usize;
    for (tree, f) in built {
        let local = qubits_in(tree.qubit_set());
        let target: Vec<usize> = match &f.qubits {
            Some(list) => list.clone(),
            None => {
                let mut out = Vec::with_capacity(local.len());
                while out.len() < local.len() {
                    if next_free > 16 {
                        return Err(coverage(f.pos, "more than 16 qubits".into()));
                    }
                    let bit = 1 << (next_free - 1);
                    if claimed & bit == 0 {
                        claimed |= bit;
                        out.push(next_free);
                    }
                    next_free += 1;
                }
                out
            }
        };
        let map = |q: usize| target[local.iter().position(|&l| l == q).unwrap()];
        children.push(tree.relabel(&map));
    }

    let tree = if children.len() == 1 { children.pop().unwrap() } else { Tree::Product(children).canonicalize() };
    Ok(if t.coeff == ONE { tree } else { tree.scaled(t.coeff) })
}

fn ket_tree(bits: &[bool]) -> TreeNode {
    let leaves: Vec<TreeNode> = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| Tree::Leaf { qubit: i + 1, amp: if b { LeafAmp::ket1() } else { LeafAmp::ket0() } })
        .collect();
    if leaves.len() == 1 {
        leaves.into_iter().next().unwrap()
    } else {
        Tree::Product(leaves)
    }
}

// ---------- printing ----------

/// Prints a tree so that [`parse_braket`] reproduces it exactly.
pub fn print_braket(t: &TreeNode) -> String {
    let mask = t.qubit_set();
    let qs = qubits_in(mask);
    let mut out = String::new();
    if qs.iter().enumerate().all(|(i, &q)| q == i + 1) {
        print_node(t, &mut out);
    } else {
        let rank = |q: usize| qs.iter().position(|&x| x == q).unwrap() + 1;
        out.push('(');
        print_node(&t.relabel(&rank), &mut out);
        out.push(')');
        push_list(&qs, &mut out);
    }
    out
}

fn push_list(qs: &[usize], out: &mut String) {
    out.push_str("@[");
    for (i, q) in qs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{q}");
    }
    out.push(']');
}

fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

/// Complex literal; negative ones are parenthesized so they can follow `+`.
fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        let s = fmt_real(z.re);
        if z.re < 0.0 {
            format!("({s})")
        } else {
            s
        }
    } else if z.re == 0.0 {
        let s = format!("{}i", fmt_real(z.im));
        if z.im < 0.0 {
            format!("({s})")
        } else {
            s
        }
    } else if z.im < 0.0 {
        format!("({}-{}i)", fmt_real(z.re), fmt_real(-z.im))
    } else {
        format!("({}+{}i)", fmt_real(z.re), fmt_real(z.im))
    }
}

fn basis_bit(amp: &LeafAmp) -> Option<char> {
    if amp.a == ONE && amp.b == ZERO {
        Some('0')
    } else if amp.a == ZERO && amp.b == ONE {
        Some('1')
    } else {
        None
    }
}

/// Writes a term/expression for a node whose qubits are exactly `1..=k`.
fn print_node(t: &TreeNode, out: &mut String) {
    match t {
        Tree::Leaf { amp, .. } => print_leaf(amp, out),
        Tree::Sum(children) => {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                print_node(c, out);
            }
        }
        Tree::Product(children) => print_product(children, out),
    }
}

fn print_leaf(amp: &LeafAmp, out: &mut String) {
    if let Some(bit) = basis_bit(amp) {
        let _ = write!(out, "|{bit}>");
        return;
    }
    out.push('(');
    match (amp.a == ZERO, amp.b == ZERO) {
        (false, true) => {
            let _ = write!(out, "{}|0>", fmt_complex(amp.a));
        }
        (true, false) => {
            let _ = write!(out, "{}|1>", fmt_complex(amp.b));
        }
        _ => {
            let _ = write!(out, "{}|0> + {}|1>", fmt_complex(amp.a), fmt_complex(amp.b));
        }
    }
    out.push(')');
}

fn print_product(children: &[TreeNode], out: &mut String) {
    let all_mask = children.iter().fold(0, |m, c| m | c.qubit_set());
    let mut order: Vec<&TreeNode> = children.iter().collect();
    order.sort_by_key(|c| c.qubit_set().trailing_zeros());

    // A product of leaves whose amplitudes are basis vectors, except that the
    // first leaf may carry a scalar, prints as `c|bits>`.
    if order.iter().all(|c| c.is_leaf()) {
        let amps: Vec<&LeafAmp> = order
            .iter()
            .map(|c| match c {
                Tree::Leaf { amp, .. } => amp,
                _ => unreachable!(),
            })
            .collect();
        if amps[1..].iter().all(|a| basis_bit(a).is_some()) {
            let first = amps[0];
            let lead = if let Some(b) = basis_bit(first) {
                Some((ONE, b))
            } else if first.b == ZERO && first.a != ZERO {
                Some((first.a, '0'))
            } else if first.a == ZERO && first.b != ZERO {
                Some((first.b, '1'))
            } else {
                None
            };
            if let Some((c, b0)) = lead {
                if c != ONE {
                    out.push_str(&fmt_complex(c));
                }
                out.push('|');
                out.push(b0);
                amps[1..].iter().for_each(|a| out.push(basis_bit(a).unwrap()));
                out.push('>');
                return;
            }
        }
    }

    let mut remaining = qubits_in(all_mask);
    for c in order {
        let qs = qubits_in(c.qubit_set());
        let default: Vec<usize> = remaining[..qs.len()].to_vec();
        remaining.retain(|q| !qs.contains(q));
        let rank = |q: usize| qs.iter().position(|&x| x == q).unwrap() + 1;
        let local = c.relabel(&rank);
        match &local {
            Tree::Leaf { .. } => print_node(&local, out),
            _ => {
                out.push('(');
                print_node(&local, out);
                out.push(')');
            }
        }
        if qs != default {
            push_list(&qs, out);
        }
    }
}
