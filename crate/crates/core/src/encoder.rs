//! Quantified formulas for the counting and auditing queries, their Boolean
//! circuits, and QDIMACS output via the Tseitin transformation.
//!
//! Every formula is a prefix of quantifier blocks over consecutive variables
//! (1-based, in block order) and a circuit matrix over those variables. The
//! matrix is built on first use; prefix and variable budget are available
//! without building it, which matters for the large `cells` instances.

use std::fmt::{self, Write as _};
use std::sync::OnceLock;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::CnfFormula;
use crate::gf2hash::{FieldElem, FieldSpec, HashError, HashFunction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("parameter {name}={value} outside {lo}..={hi}")]
    OutOfRange {
        name: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("witness has {got} hash functions, expected {expected}")]
    WitnessArity { expected: usize, got: usize },
    #[error("witness hash {index} has shape (n={n}, m={m}, k={k}), expected (n={en}, m={em}, k={ek})")]
    WitnessShape {
        index: usize,
        n: usize,
        m: usize,
        k: usize,
        en: usize,
        em: usize,
        ek: usize,
    },
    #[error("family {0} has no quantified hash block to substitute")]
    NotSubstitutable(&'static str),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("QDIMACS line {line}: {msg}")]
    Qdimacs { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quant {
    Exists,
    Forall,
}

impl Quant {
    fn letter(self) -> char {
        match self {
            Quant::Exists => 'e',
            Quant::Forall => 'a',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    HashCoeff,
    Cell,
    Assignment,
    Tseitin,
}

/// Variables `first .. first + len` under one quantifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub quant: Quant,
    pub role: Role,
    pub first: usize,
    pub len: usize,
}

impl Block {
    pub fn vars(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.len
    }
}

/// How the `stock` matrix relates `z₁` to the colliding assignments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StockEncoding {
    /// `∀z₁ ∀z₂⁽¹⁾…z₂⁽ᵐ⁾`: each solution is alone in its cell under some `hᵢ`.
    #[default]
    Isolating,
    /// `∀z₁ ∀z₂` with a `z₁ ≠ z₂` guard: distinct solutions are separated by some `hᵢ`.
    Guarded,
    /// The unguarded single-`z₂` form; false whenever F is satisfiable.
    Unguarded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Stock { m: usize, encoding: StockEncoding },
    /// Negation of the isolating `stock` formula: `∀h ∃z₁ ∃z₂⁽¹⁾…z₂⁽ᵐ⁾`.
    StockNegation { m: usize },
    Holes { m: usize },
    Cells { m: usize, ell: usize, u: usize },
    /// Substituted `stock(v)` conjoined with `stock_negation(v − 1)`.
    StockAudit { v: usize },
    /// Substituted `stock(c_high)` conjoined with substituted `holes(c_low)`.
    CountAudit { c_low: usize, c_high: usize },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Stock { .. } => "stock",
            Family::StockNegation { .. } => "stock_negation",
            Family::Holes { .. } => "holes",
            Family::Cells { .. } => "cells",
            Family::StockAudit { .. } => "stock_audit",
            Family::CountAudit { .. } => "count_audit",
        }
    }

    /// The loop parameter (`m`, `v`, or `c_high`).
    pub fn param(&self) -> usize {
        match *self {
            Family::Stock { m, .. }
            | Family::StockNegation { m }
            | Family::Holes { m }
            | Family::Cells { m, .. } => m,
            Family::StockAudit { v } => v,
            Family::CountAudit { c_high, .. } => c_high,
        }
    }

    /// `(m, k)` of every hash that a witness must supply, in order.
    pub fn witness_shapes(&self, n: usize) -> Vec<(usize, usize)> {
        match *self {
            Family::Stock { m, .. } => vec![(m, 2); m],
            Family::StockNegation { .. } => Vec::new(),
            Family::Holes { m } if m == 0 => Vec::new(),
            Family::Holes { m } => vec![(m, 2); m + 1],
            Family::Cells { m, .. } => vec![(m, cells_k(n))],
            Family::StockAudit { v } => vec![(v, 2); v],
            Family::CountAudit { c_low, c_high } => {
                let mut s = vec![(c_high, 2); c_high];
                if c_low > 0 {
                    s.extend(vec![(c_low, 2); c_low + 1]);
                }
                s
            }
        }
    }

    fn validate(&self, n: usize) -> Result<(), EncodeError> {
        let range = |name, value, lo, hi| {
            if (lo..=hi).contains(&value) {
                Ok(())
            } else {
                Err(EncodeError::OutOfRange { name, value, lo, hi })
            }
        };
        match *self {
            Family::Stock { m, .. } => range("m", m, 1, n),
            Family::StockNegation { m } => range("m", m, 0, n),
            Family::Holes { m } => range("m", m, 0, n),
            Family::Cells { m, ell, u } => {
                range("m", m, 1, n)?;
                if ell == 0 || u <= ell {
                    return Err(EncodeError::BadParams(format!("need 1 <= ell < u, got ell={ell}, u={u}")));
                }
                Ok(())
            }
            Family::StockAudit { v } => range("v", v, 1, n),
            Family::CountAudit { c_low, c_high } => {
                range("c_low", c_low, 0, n)?;
                range("c_high", c_high, 1, n)
            }
        }
    }

    /// Blocks in matrix-construction order, including empty ones.
    fn plan(&self, n: usize, substituted: bool) -> Vec<Block> {
        let mut p = Planner::default();
        let hash_len = |m: usize, k: usize| k * n.max(m);
        match *self {
            Family::Stock { m, encoding } => {
                if !substituted {
                    for _ in 0..m {
                        p.push(Quant::Exists, Role::HashCoeff, hash_len(m, 2));
                    }
                }
                p.push(Quant::Forall, Role::Assignment, n);
                let copies = if encoding == StockEncoding::Isolating { m } else { 1 };
                for _ in 0..copies {
                    p.push(Quant::Forall, Role::Assignment, n);
                }
            }
            Family::StockNegation { m } => {
                for _ in 0..m {
                    p.push(Quant::Forall, Role::HashCoeff, hash_len(m, 2));
                }
                for _ in 0..=m {
                    p.push(Quant::Exists, Role::Assignment, n);
                }
            }
            Family::Holes { m } => {
                if !substituted && m > 0 {
                    for _ in 0..=m {
                        p.push(Quant::Exists, Role::HashCoeff, hash_len(m, 2));
                    }
                }
                p.push(Quant::Forall, Role::Cell, m);
                p.push(Quant::Exists, Role::Assignment, n);
            }
            Family::Cells { m, ell, u } => {
                if !substituted {
                    p.push(Quant::Exists, Role::HashCoeff, hash_len(m, cells_k(n)));
                }
                p.push(Quant::Forall, Role::Cell, m);
                for _ in 0..=u {
                    p.push(Quant::Forall, Role::Assignment, n);
                }
                for _ in 0..ell {
                    p.push(Quant::Exists, Role::Assignment, n);
                }
            }
            Family::StockAudit { v } => {
                for _ in 0..v - 1 {
                    p.push(Quant::Forall, Role::HashCoeff, hash_len(v - 1, 2));
                }
                for _ in 0..=v {
                    p.push(Quant::Forall, Role::Assignment, n);
                }
                for _ in 0..v {
                    p.push(Quant::Exists, Role::Assignment, n);
                }
            }
            Family::CountAudit { c_low, c_high } => {
                p.push(Quant::Forall, Role::Cell, c_low);
                for _ in 0..=c_high {
                    p.push(Quant::Forall, Role::Assignment, n);
                }
                p.push(Quant::Exists, Role::Assignment, n);
            }
        }
        p.blocks
    }

    /// Variable budget from the prefix alone.
    pub fn budget(&self, n: usize, substituted: bool) -> VarBudget {
        VarBudget::from_blocks(self.tag(), self.param(), n, &self.plan(n, substituted))
    }
}

/// Cells hashes use `k = n`; the family needs `k ≥ 2`.
pub fn cells_k(n: usize) -> usize {
    n.max(2)
}

#[derive(Default)]
struct Planner {
    blocks: Vec<Block>,
    next: usize,
}

impl Planner {
    fn push(&mut self, quant: Quant, role: Role, len: usize) {
        let first = if self.next == 0 { 1 } else { self.next };
        self.blocks.push(Block {
            quant,
            role,
            first,
            len,
        });
        self.next = first + len;
    }
}

/// Per-role variable counts of a quantified formula (tseitin excluded).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarBudget {
    pub family: String,
    pub m: usize,
    pub n: usize,
    pub hash_vars: usize,
    pub cell_vars: usize,
    pub assign_vars: usize,
    pub total: usize,
}

impl VarBudget {
    fn from_blocks(family: &str, m: usize, n: usize, blocks: &[Block]) -> Self {
        let sum = |role| blocks.iter().filter(|b| b.role == role).map(|b| b.len).sum::<usize>();
        let (hash_vars, cell_vars, assign_vars) = (sum(Role::HashCoeff), sum(Role::Cell), sum(Role::Assignment));
        VarBudget {
            family: family.to_string(),
            m,
            n,
            hash_vars,
            cell_vars,
            assign_vars,
            total: hash_vars + cell_vars + assign_vars,
        }
    }

    pub const CSV_HEADER: &'static str = "family,m,n,hash_vars,cell_vars,assign_vars,total";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.family, self.m, self.n, self.hash_vars, self.cell_vars, self.assign_vars, self.total
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Const(bool),
    Input(usize),
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Xor(NodeId, NodeId),
}

/// A hash-consed Boolean circuit with constant folding.
/// Children always precede their parents.
#[derive(Clone, Debug)]
pub struct Circuit {
    gates: Vec<Gate>,
    memo: FxHashMap<Gate, NodeId>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

impl Circuit {
    pub const FALSE: NodeId = NodeId(0);
    pub const TRUE: NodeId = NodeId(1);

    pub fn new() -> Self {
        let mut c = Circuit {
            gates: Vec::new(),
            memo: FxHashMap::default(),
        };
        c.intern(Gate::Const(false));
        c.intern(Gate::Const(true));
        c
    }

    fn intern(&mut self, g: Gate) -> NodeId {
        if let Some(&id) = self.memo.get(&g) {
            return id;
        }
        let id = NodeId(self.gates.len() as u32);
        self.gates.push(g);
        self.memo.insert(g, id);
        id
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn gate(&self, id: NodeId) -> Gate {
        self.gates[id.index()]
    }

    pub fn constant(b: bool) -> NodeId {
        if b {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    fn as_const(&self, x: NodeId) -> Option<bool> {
        match self.gates[x.index()] {
            Gate::Const(b) => Some(b),
            _ => None,
        }
    }

    fn complementary(&self, a: NodeId, b: NodeId) -> bool {
        self.gates[a.index()] == Gate::Not(b) || self.gates[b.index()] == Gate::Not(a)
    }

    pub fn input(&mut self, var: usize) -> NodeId {
        self.intern(Gate::Input(var))
    }

    pub fn inputs(&mut self, block: &Block) -> Vec<NodeId> {
        block.vars().map(|v| self.input(v)).collect()
    }

    pub fn not(&mut self, x: NodeId) -> NodeId {
        match self.gates[x.index()] {
            Gate::Const(b) => Self::constant(!b),
            Gate::Not(y) => y,
            _ => self.intern(Gate::Not(x)),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(false), _) | (_, Some(false)) => return Self::FALSE,
            (Some(true), _) => return b,
            (_, Some(true)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if self.complementary(a, b) {
            return Self::FALSE;
        }
        self.intern(Gate::And(a.min(b), a.max(b)))
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(true), _) | (_, Some(true)) => return Self::TRUE,
            (Some(false), _) => return b,
            (_, Some(false)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if self.complementary(a, b) {
            return Self::TRUE;
        }
        self.intern(Gate::Or(a.min(b), a.max(b)))
    }

    pub fn xor(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return Self::constant(x ^ y),
            (Some(false), _) => return b,
            (_, Some(false)) => return a,
            (Some(true), _) => return self.not(b),
            (_, Some(true)) => return self.not(a),
            _ => {}
        }
        if a == b {
            return Self::FALSE;
        }
        // Pull negations outward so equal parities share a node.
        if let Gate::Not(x) = self.gates[a.index()] {
            let inner = self.xor(x, b);
            return self.not(inner);
        }
        if let Gate::Not(y) = self.gates[b.index()] {
            let inner = self.xor(a, y);
            return self.not(inner);
        }
        self.intern(Gate::Xor(a.min(b), a.max(b)))
    }

    pub fn xnor(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let x = self.xor(a, b);
        self.not(x)
    }

    pub fn implies(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let na = self.not(a);
        self.or(na, b)
    }

    pub fn and_all(&mut self, xs: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut acc = Self::TRUE;
        for x in xs {
            acc = self.and(acc, x);
            if acc == Self::FALSE {
                break;
            }
        }
        acc
    }

    pub fn or_all(&mut self, xs: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut acc = Self::FALSE;
        for x in xs {
            acc = self.or(acc, x);
            if acc == Self::TRUE {
                break;
            }
        }
        acc
    }

    pub fn xor_all(&mut self, xs: impl IntoIterator<Item = NodeId>) -> NodeId {
        xs.into_iter().fold(Self::FALSE, |acc, x| self.xor(acc, x))
    }

    pub fn eq_bits(&mut self, a: &[NodeId], b: &[NodeId]) -> NodeId {
        assert_eq!(a.len(), b.len(), "bit-vector widths differ");
        let bits: Vec<NodeId> = a.iter().zip(b).map(|(&x, &y)| self.xnor(x, y)).collect();
        self.and_all(bits)
    }

    pub fn ne_bits(&mut self, a: &[NodeId], b: &[NodeId]) -> NodeId {
        let eq = self.eq_bits(a, b);
        self.not(eq)
    }

    /// `F(z)` where `z[i]` carries variable `i + 1` of `f`.
    pub fn cnf(&mut self, f: &CnfFormula, z: &[NodeId]) -> NodeId {
        if f.has_empty_clause() {
            return Self::FALSE;
        }
        let clauses: Vec<NodeId> = f
            .clauses()
            .iter()
            .map(|clause| {
                let lits: Vec<NodeId> = clause
                    .iter()
                    .map(|l| {
                        let x = z[l.index()];
                        if l.is_positive() {
                            x
                        } else {
                            self.not(x)
                        }
                    })
                    .collect();
                self.or_all(lits)
            })
            .collect();
        self.and_all(clauses)
    }

    /// Nodes reachable from `root`, children first.
    pub fn cone(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.gates.len()];
        seen[root.index()] = true;
        for i in (0..=root.index()).rev() {
            if !seen[i] {
                continue;
            }
            match self.gates[i] {
                Gate::Not(a) => seen[a.index()] = true,
                Gate::And(a, b) | Gate::Or(a, b) | Gate::Xor(a, b) => {
                    seen[a.index()] = true;
                    seen[b.index()] = true;
                }
                _ => {}
            }
        }
        (0..=root.index()).filter(|&i| seen[i]).map(|i| NodeId(i as u32)).collect()
    }

    /// Evaluates the nodes in `order` (a cone); `vals[v]` is variable `v`.
    pub fn eval_cone(&self, order: &[NodeId], vals: &[bool], scratch: &mut Vec<bool>) -> bool {
        scratch.resize(self.gates.len(), false);
        let mut last = false;
        for &id in order {
            let v = match self.gates[id.index()] {
                Gate::Const(b) => b,
                Gate::Input(var) => vals[var],
                Gate::Not(a) => !scratch[a.index()],
                Gate::And(a, b) => scratch[a.index()] && scratch[b.index()],
                Gate::Or(a, b) => scratch[a.index()] || scratch[b.index()],
                Gate::Xor(a, b) => scratch[a.index()] ^ scratch[b.index()],
            };
            scratch[id.index()] = v;
            last = v;
        }
        last
    }

    pub fn eval(&self, root: NodeId, vals: &[bool]) -> bool {
        let order = self.cone(root);
        self.eval_cone(&order, vals, &mut Vec::new())
    }
}

/// Coefficient bits of one hash function inside a circuit.
#[derive(Clone, Debug)]
pub struct HashBits {
    pub spec: FieldSpec,
    pub m: usize,
    /// `k` coefficients of `w` bits each, least significant first.
    pub coeffs: Vec<Vec<NodeId>>,
}

impl HashBits {
    pub fn constant(h: &HashFunction) -> Self {
        let w = h.w();
        HashBits {
            spec: *h.spec(),
            m: h.m(),
            coeffs: h
                .coeffs()
                .iter()
                .map(|a| (0..w).map(|b| Circuit::constant(a.bit(b))).collect())
                .collect(),
        }
    }

    /// Coefficient `j`, bit `b` is variable `block.first + j·w + b`.
    pub fn quantified(c: &mut Circuit, block: &Block, n: usize, m: usize, k: usize) -> Result<Self, EncodeError> {
        let w = n.max(m);
        debug_assert_eq!(block.len, k * w);
        let spec = FieldSpec::new(w)?;
        let coeffs = (0..k)
            .map(|j| (0..w).map(|b| c.input(block.first + j * w + b)).collect())
            .collect();
        Ok(HashBits { spec, m, coeffs })
    }
}

/// `x^t mod p` for `t = w .. 2w − 2`.
fn reduction_rows(spec: &FieldSpec) -> Vec<FieldElem> {
    let w = spec.width();
    if w < 2 {
        return Vec::new();
    }
    let x = FieldElem::from_u64(2);
    let mut rows = Vec::with_capacity(w - 1);
    let mut cur = spec.x_pow(w);
    for _ in w..=2 * w - 2 {
        rows.push(cur);
        cur = spec.mul(cur, x);
    }
    rows
}

/// Field product of two bit vectors, keeping the low `out_bits` bits.
fn mul_circuit(c: &mut Circuit, rows: &[FieldElem], w: usize, a: &[NodeId], b: &[NodeId], out_bits: usize) -> Vec<NodeId> {
    let mut prod = vec![None; 2 * w - 1];
    let mut coeff = |c: &mut Circuit, t: usize| -> NodeId {
        if let Some(x) = prod[t] {
            return x;
        }
        let lo = t.saturating_sub(w - 1);
        let terms: Vec<NodeId> = (lo..=t.min(w - 1)).map(|i| c.and(a[i], b[t - i])).collect();
        let x = c.xor_all(terms);
        prod[t] = Some(x);
        x
    };
    (0..out_bits)
        .map(|j| {
            let mut acc = coeff(c, j);
            for (r, row) in rows.iter().enumerate() {
                if row.bit(j) {
                    let p = coeff(c, w + r);
                    acc = c.xor(acc, p);
                }
            }
            acc
        })
        .collect()
}

/// Low `m` bits of the hash at `x` (`x` has `n ≤ w` bits, zero-extended).
pub fn hash_circuit(c: &mut Circuit, h: &HashBits, x: &[NodeId]) -> Vec<NodeId> {
    let w = h.spec.width();
    let rows = reduction_rows(&h.spec);
    let mut xs = x.to_vec();
    xs.resize(w, Circuit::FALSE);
    let k = h.coeffs.len();
    let mut acc = h.coeffs[k - 1].clone();
    for i in (0..k - 1).rev() {
        let bits = if i == 0 { h.m } else { w };
        let prod = mul_circuit(c, &rows, w, &acc, &xs, bits);
        acc = prod.iter().zip(&h.coeffs[i]).map(|(&p, &a)| c.xor(p, a)).collect();
    }
    acc.truncate(h.m);
    acc
}

/// "Cell `alpha` holds at most `ys.len() − 1` solutions": if every `y` is a
/// solution hashing to `alpha`, two of them coincide.
pub fn not_many_fragment(c: &mut Circuit, f: &CnfFormula, h: &HashBits, alpha: &[NodeId], ys: &[Vec<NodeId>]) -> NodeId {
    let members: Vec<NodeId> = ys
        .iter()
        .map(|y| {
            let fy = c.cnf(f, y);
            let hy = hash_circuit(c, h, y);
            let eq = c.eq_bits(&hy, alpha);
            c.and(fy, eq)
        })
        .collect();
    let all_in = c.and_all(members);
    let mut pairs = Vec::new();
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            pairs.push(c.eq_bits(&ys[i], &ys[j]));
        }
    }
    let repeat = c.or_all(pairs);
    c.implies(all_in, repeat)
}

/// "The `zs` are pairwise distinct solutions in cell `alpha`".
pub fn at_least_few_fragment(c: &mut Circuit, f: &CnfFormula, h: &HashBits, alpha: &[NodeId], zs: &[Vec<NodeId>]) -> NodeId {
    let mut parts = Vec::new();
    for z in zs {
        parts.push(c.cnf(f, z));
        let hz = hash_circuit(c, h, z);
        parts.push(c.eq_bits(&hz, alpha));
    }
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            parts.push(c.ne_bits(&zs[i], &zs[j]));
        }
    }
    c.and_all(parts)
}

/// Collision of `z1` with `z2` under `h`: `F(z2) ∧ z2 ≠ z1 ∧ h(z1) = h(z2)`.
fn collision(c: &mut Circuit, f: &CnfFormula, h: &HashBits, z1: &[NodeId], hz1: &[NodeId], z2: &[NodeId]) -> NodeId {
    let fz2 = c.cnf(f, z2);
    let ne = c.ne_bits(z1, z2);
    let hz2 = hash_circuit(c, h, z2);
    let eq = c.eq_bits(hz1, &hz2);
    c.and_all([fz2, ne, eq])
}

fn stock_isolating(c: &mut Circuit, f: &CnfFormula, hs: &[HashBits], z1: &[NodeId], z2s: &[Vec<NodeId>]) -> NodeId {
    let fz1 = c.cnf(f, z1);
    let escapes: Vec<NodeId> = hs
        .iter()
        .zip(z2s)
        .map(|(h, z2)| {
            let hz1 = hash_circuit(c, h, z1);
            let col = collision(c, f, h, z1, &hz1, z2);
            c.not(col)
        })
        .collect();
    let some = c.or_all(escapes);
    c.implies(fz1, some)
}

fn stock_negation(c: &mut Circuit, f: &CnfFormula, hs: &[HashBits], z1: &[NodeId], z2s: &[Vec<NodeId>]) -> NodeId {
    let fz1 = c.cnf(f, z1);
    let mut parts = vec![fz1];
    for (h, z2) in hs.iter().zip(z2s) {
        let hz1 = hash_circuit(c, h, z1);
        parts.push(collision(c, f, h, z1, &hz1, z2));
    }
    c.and_all(parts)
}

fn holes_matrix(c: &mut Circuit, f: &CnfFormula, hs: &[HashBits], alpha: &[NodeId], z: &[NodeId]) -> NodeId {
    let fz = c.cnf(f, z);
    if hs.is_empty() {
        return fz;
    }
    let hits: Vec<NodeId> = hs
        .iter()
        .map(|h| {
            let hz = hash_circuit(c, h, z);
            c.eq_bits(&hz, alpha)
        })
        .collect();
    let any = c.or_all(hits);
    c.and(fz, any)
}

/// Matrix circuit and its root.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub circuit: Circuit,
    pub root: NodeId,
}

impl Matrix {
    /// Textual dump, one node per line (`n7 = (and n3 n5)`), root last.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        for id in self.circuit.cone(self.root) {
            let body = match self.circuit.gate(id) {
                Gate::Const(b) => format!("{b}"),
                Gate::Input(v) => format!("(var {v})"),
                Gate::Not(a) => format!("(not n{})", a.0),
                Gate::And(a, b) => format!("(and n{} n{})", a.0, b.0),
                Gate::Or(a, b) => format!("(or n{} n{})", a.0, b.0),
                Gate::Xor(a, b) => format!("(xor n{} n{})", a.0, b.0),
            };
            let _ = writeln!(out, "n{} = {body}", id.0);
        }
        out
    }
}

/// Walks a plan in matrix-construction order.
struct Cursor<'a> {
    plan: &'a [Block],
    i: usize,
}

impl Cursor<'_> {
    fn block(&mut self) -> Block {
        let b = self.plan[self.i];
        self.i += 1;
        b
    }

    fn bits(&mut self, c: &mut Circuit) -> Vec<NodeId> {
        let b = self.block();
        c.inputs(&b)
    }

    fn many(&mut self, c: &mut Circuit, count: usize) -> Vec<Vec<NodeId>> {
        (0..count).map(|_| self.bits(c)).collect()
    }

    fn hashes(&mut self, c: &mut Circuit, count: usize, n: usize, m: usize, k: usize) -> Vec<HashBits> {
        (0..count)
            .map(|_| {
                let b = self.block();
                HashBits::quantified(c, &b, n, m, k).expect("width validated with the family")
            })
            .collect()
    }
}

/// A prenex quantified Boolean formula for one query family.
#[derive(Clone, Debug)]
pub struct QuantifiedFormula {
    family: Family,
    formula: CnfFormula,
    /// Substituted witness hashes (flat; see [`Family::witness_shapes`]).
    hashes: Vec<HashFunction>,
    substituted: bool,
    plan: Vec<Block>,
    matrix: OnceLock<Matrix>,
}

fn check_witness(family: &Family, n: usize, hashes: &[HashFunction]) -> Result<(), EncodeError> {
    let shapes = family.witness_shapes(n);
    if shapes.len() != hashes.len() {
        return Err(EncodeError::WitnessArity {
            expected: shapes.len(),
            got: hashes.len(),
        });
    }
    for (index, ((em, ek), h)) in shapes.into_iter().zip(hashes).enumerate() {
        if (h.n(), h.m(), h.k()) != (n, em, ek) {
            return Err(EncodeError::WitnessShape {
                index,
                n: h.n(),
                m: h.m(),
                k: h.k(),
                en: n,
                em,
                ek,
            });
        }
    }
    Ok(())
}

impl QuantifiedFormula {
    fn make(family: Family, f: &CnfFormula, hashes: Vec<HashFunction>, substituted: bool) -> Result<Self, EncodeError> {
        let n = f.num_vars();
        family.validate(n)?;
        if substituted {
            check_witness(&family, n, &hashes)?;
        } else if matches!(family, Family::Holes { m: 0 }) {
            return Err(EncodeError::OutOfRange {
                name: "m",
                value: 0,
                lo: 1,
                hi: n,
            });
        }
        Ok(QuantifiedFormula {
            family,
            formula: f.clone(),
            hashes,
            substituted,
            plan: family.plan(n, substituted),
            matrix: OnceLock::new(),
        })
    }

    /// Build a family with its hash block quantified.
    pub fn build(family: Family, f: &CnfFormula) -> Result<Self, EncodeError> {
        if matches!(family, Family::StockAudit { .. } | Family::CountAudit { .. }) {
            return Err(EncodeError::BadParams(format!("{} needs a witness", family.tag())));
        }
        Self::make(family, f, Vec::new(), false)
    }

    /// Build a family with the hash block replaced by the given witness.
    pub fn substituted(family: Family, f: &CnfFormula, hashes: &[HashFunction]) -> Result<Self, EncodeError> {
        if matches!(family, Family::StockNegation { .. }) {
            return Err(EncodeError::NotSubstitutable(family.tag()));
        }
        Self::make(family, f, hashes.to_vec(), true)
    }

    /// The same formula with its existential hash block substituted.
    pub fn substitute(&self, hashes: &[HashFunction]) -> Result<Self, EncodeError> {
        if self.substituted {
            return Err(EncodeError::NotSubstitutable(self.family.tag()));
        }
        Self::substituted(self.family, &self.formula, hashes)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    pub fn n(&self) -> usize {
        self.formula.num_vars()
    }

    pub fn hashes(&self) -> &[HashFunction] {
        &self.hashes
    }

    pub fn is_substituted(&self) -> bool {
        self.substituted
    }

    /// Nonempty quantifier blocks in order.
    pub fn prefix(&self) -> Vec<Block> {
        self.plan.iter().copied().filter(|b| b.len > 0).collect()
    }

    /// Quantifier of each block after merging equal neighbours.
    pub fn shape(&self) -> Vec<Quant> {
        let mut out: Vec<Quant> = Vec::new();
        for b in self.prefix() {
            if out.last() != Some(&b.quant) {
                out.push(b.quant);
            }
        }
        out
    }

    /// Number of prefix (non-tseitin) variables.
    pub fn num_vars(&self) -> usize {
        self.plan.iter().map(|b| b.len).sum()
    }

    pub fn budget(&self) -> VarBudget {
        VarBudget::from_blocks(self.family.tag(), self.family.param(), self.n(), &self.plan)
    }

    pub fn query_vars(&self) -> usize {
        self.num_vars()
    }

    pub fn matrix(&self) -> &Matrix {
        self.matrix.get_or_init(|| self.build_matrix())
    }

    fn build_matrix(&self) -> Matrix {
        let f = &self.formula;
        let n = self.n();
        let mut c = Circuit::new();
        let mut cur = Cursor { plan: &self.plan, i: 0 };
        let consts = |hs: &[HashFunction]| hs.iter().map(HashBits::constant).collect::<Vec<_>>();
        let root = match self.family {
            Family::Stock { m, encoding } => {
                let hs = if self.substituted {
                    consts(&self.hashes)
                } else {
                    cur.hashes(&mut c, m, n, m, 2)
                };
                let z1 = cur.bits(&mut c);
                match encoding {
                    StockEncoding::Isolating => {
                        let z2s = cur.many(&mut c, m);
                        stock_isolating(&mut c, f, &hs, &z1, &z2s)
                    }
                    StockEncoding::Guarded => {
                        let z2 = cur.bits(&mut c);
                        let fz1 = c.cnf(f, &z1);
                        let fz2 = c.cnf(f, &z2);
                        let ne = c.ne_bits(&z1, &z2);
                        let both = c.and_all([fz1, fz2, ne]);
                        let seps: Vec<NodeId> = hs
                            .iter()
                            .map(|h| {
                                let a = hash_circuit(&mut c, h, &z1);
                                let b = hash_circuit(&mut c, h, &z2);
                                c.ne_bits(&a, &b)
                            })
                            .collect();
                        let sep = c.or_all(seps);
                        c.implies(both, sep)
                    }
                    StockEncoding::Unguarded => {
                        let z2 = cur.bits(&mut c);
                        let fz1 = c.cnf(f, &z1);
                        let fz2 = c.cnf(f, &z2);
                        let parts: Vec<NodeId> = hs
                            .iter()
                            .map(|h| {
                                let a = hash_circuit(&mut c, h, &z1);
                                let b = hash_circuit(&mut c, h, &z2);
                                let eq = c.eq_bits(&a, &b);
                                let bad = c.and_all([fz1, eq, fz2]);
                                c.not(bad)
                            })
                            .collect();
                        c.or_all(parts)
                    }
                }
            }
            Family::StockNegation { m } => {
                let hs = cur.hashes(&mut c, m, n, m, 2);
                let z1 = cur.bits(&mut c);
                let z2s = cur.many(&mut c, m);
                stock_negation(&mut c, f, &hs, &z1, &z2s)
            }
            Family::Holes { m } => {
                let hs = if self.substituted {
                    consts(&self.hashes)
                } else {
                    cur.hashes(&mut c, m + 1, n, m, 2)
                };
                let alpha = cur.bits(&mut c);
                let z = cur.bits(&mut c);
                holes_matrix(&mut c, f, &hs, &alpha, &z)
            }
            Family::Cells { m, ell, u } => {
                let h = if self.substituted {
                    HashBits::constant(&self.hashes[0])
                } else {
                    cur.hashes(&mut c, 1, n, m, cells_k(n)).remove(0)
                };
                let alpha = cur.bits(&mut c);
                let ys = cur.many(&mut c, u + 1);
                let zs = cur.many(&mut c, ell);
                let few = not_many_fragment(&mut c, f, &h, &alpha, &ys);
                let many = at_least_few_fragment(&mut c, f, &h, &alpha, &zs);
                c.and(few, many)
            }
            Family::StockAudit { v } => {
                let neg_hs = cur.hashes(&mut c, v - 1, n, v - 1, 2);
                let pos_hs = consts(&self.hashes);
                let z1 = cur.bits(&mut c);
                let z2s = cur.many(&mut c, v);
                let w1 = cur.bits(&mut c);
                let w2s = cur.many(&mut c, v - 1);
                let pos = stock_isolating(&mut c, f, &pos_hs, &z1, &z2s);
                let neg = stock_negation(&mut c, f, &neg_hs, &w1, &w2s);
                c.and(pos, neg)
            }
            Family::CountAudit { c_high, .. } => {
                let all = consts(&self.hashes);
                let (stock, holes) = all.split_at(c_high);
                let alpha = cur.bits(&mut c);
                let z1 = cur.bits(&mut c);
                let z2s = cur.many(&mut c, c_high);
                let z = cur.bits(&mut c);
                let pos = stock_isolating(&mut c, f, stock, &z1, &z2s);
                let neg = holes_matrix(&mut c, f, holes, &alpha, &z);
                c.and(pos, neg)
            }
        };
        debug_assert_eq!(cur.i, self.plan.len());
        Matrix { circuit: c, root }
    }

    /// Truth by sweeping every prefix variable, or `None` if there are more
    /// than `max_vars` of them.
    pub fn literal_truth(&self, max_vars: usize) -> Option<bool> {
        let nv = self.num_vars();
        if nv > max_vars {
            return None;
        }
        let mx = self.matrix();
        let order = mx.circuit.cone(mx.root);
        let mut quants = vec![Quant::Exists; nv + 1];
        for b in &self.plan {
            for v in b.vars() {
                quants[v] = b.quant;
            }
        }
        let mut vals = vec![false; nv + 1];
        let mut scratch = Vec::new();
        Some(sweep(&mx.circuit, &order, &quants, 1, &mut vals, &mut scratch))
    }

    /// QDIMACS text: prefix lines, then the Tseitin CNF of the matrix.
    pub fn to_qdimacs(&self) -> String {
        let mx = self.matrix();
        let cnf = tseitin(&mx.circuit, mx.root, self.num_vars());
        let mut lines: Vec<(Quant, Vec<usize>)> = Vec::new();
        for b in self.prefix() {
            match lines.last_mut() {
                Some((q, vars)) if *q == b.quant => vars.extend(b.vars()),
                _ => lines.push((b.quant, b.vars().collect())),
            }
        }
        if cnf.aux > 0 {
            let aux = self.num_vars() + 1..=self.num_vars() + cnf.aux;
            match lines.last_mut() {
                Some((Quant::Exists, vars)) => vars.extend(aux),
                _ => lines.push((Quant::Exists, aux.collect())),
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "c family {} param {} n {}", self.family.tag(), self.family.param(), self.n());
        let _ = writeln!(out, "p cnf {} {}", self.num_vars() + cnf.aux, cnf.clauses.len());
        for (q, vars) in &lines {
            out.push(q.letter());
            for v in vars {
                let _ = write!(out, " {v}");
            }
            out.push_str(" 0\n");
        }
        for clause in &cnf.clauses {
            for l in clause {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }
}

impl fmt::Display for QuantifiedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) over {} vars:", self.family.tag(), self.family.param(), self.n())?;
        for b in self.prefix() {
            let q = if b.quant == Quant::Exists { "∃" } else { "∀" };
            write!(f, " {q}[{}..{}]", b.first, b.first + b.len - 1)?;
        }
        Ok(())
    }
}

fn sweep(c: &Circuit, order: &[NodeId], quants: &[Quant], var: usize, vals: &mut [bool], scratch: &mut Vec<bool>) -> bool {
    if var == quants.len() {
        return c.eval_cone(order, vals, scratch);
    }
    let want = quants[var] == Quant::Exists;
    for b in [false, true] {
        vals[var] = b;
        if sweep(c, order, quants, var + 1, vals, scratch) == want {
            vals[var] = false;
            return want;
        }
    }
    vals[var] = false;
    !want
}

struct TseitinCnf {
    aux: usize,
    clauses: Vec<Vec<i64>>,
}

/// Definitional CNF: one fresh variable per reachable binary gate, numbered
/// after `first_free − 1` in node order; `Not` reuses its child's literal.
fn tseitin(c: &Circuit, root: NodeId, prefix_vars: usize) -> TseitinCnf {
    let order = c.cone(root);
    let mut lit = vec![0i64; c.len()];
    let mut next = prefix_vars as i64;
    let mut clauses = Vec::new();
    let mut fresh = || {
        next += 1;
        next
    };
    for &id in &order {
        let g = match c.gate(id) {
            Gate::Const(_) => continue,
            Gate::Input(v) => {
                lit[id.index()] = v as i64;
                continue;
            }
            Gate::Not(a) => {
                lit[id.index()] = -lit[a.index()];
                continue;
            }
            g => g,
        };
        let x = fresh();
        lit[id.index()] = x;
        match g {
            Gate::And(a, b) => {
                let (a, b) = (lit[a.index()], lit[b.index()]);
                clauses.push(vec![-x, a]);
                clauses.push(vec![-x, b]);
                clauses.push(vec![x, -a, -b]);
            }
            Gate::Or(a, b) => {
                let (a, b) = (lit[a.index()], lit[b.index()]);
                clauses.push(vec![x, -a]);
                clauses.push(vec![x, -b]);
                clauses.push(vec![-x, a, b]);
            }
            Gate::Xor(a, b) => {
                let (a, b) = (lit[a.index()], lit[b.index()]);
                clauses.push(vec![-x, a, b]);
                clauses.push(vec![-x, -a, -b]);
                clauses.push(vec![x, -a, b]);
                clauses.push(vec![x, a, -b]);
            }
            _ => unreachable!(),
        }
    }
    let aux = (next - prefix_vars as i64) as usize;
    match c.gate(root) {
        Gate::Const(true) => {}
        Gate::Const(false) => {
            let x = prefix_vars as i64 + aux as i64 + 1;
            clauses.push(vec![x]);
            clauses.push(vec![-x]);
            return TseitinCnf { aux: aux + 1, clauses };
        }
        _ => clauses.push(vec![lit[root.index()]]),
    }
    TseitinCnf { aux, clauses }
}

/// A parsed QDIMACS file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qdimacs {
    pub num_vars: usize,
    pub prefix: Vec<(Quant, Vec<usize>)>,
    pub clauses: Vec<Vec<i64>>,
}

pub fn parse_qdimacs(text: &str) -> Result<Qdimacs, EncodeError> {
    let err = |line: usize, msg: &str| EncodeError::Qdimacs {
        line,
        msg: msg.to_string(),
    };
    let mut header: Option<(usize, usize)> = None;
    let mut prefix = Vec::new();
    let mut clauses = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('c') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let first = toks.next().unwrap();
        if first == "p" {
            if toks.next() != Some("cnf") {
                return Err(err(line, "expected 'p cnf'"));
            }
            let mut num = || toks.next().and_then(|s| s.parse::<usize>().ok());
            let (v, c) = (num(), num());
            header = Some((v.ok_or_else(|| err(line, "bad variable count"))?, c.ok_or_else(|| err(line, "bad clause count"))?));
            continue;
        }
        let (nv, _) = header.ok_or_else(|| err(line, "content before header"))?;
        let parse_lit = |s: &str| s.parse::<i64>().map_err(|_| err(line, "bad literal"));
        if first == "a" || first == "e" {
            if !clauses.is_empty() {
                return Err(err(line, "quantifier line after clauses"));
            }
            let q = if first == "a" { Quant::Forall } else { Quant::Exists };
            let mut vars = Vec::new();
            for s in toks {
                let x = parse_lit(s)?;
                if x == 0 {
                    break;
                }
                if x < 0 || x as usize > nv {
                    return Err(err(line, "quantified variable out of range"));
                }
                vars.push(x as usize);
            }
            prefix.push((q, vars));
            continue;
        }
        let mut clause = Vec::new();
        let mut closed = false;
        for s in std::iter::once(first).chain(toks) {
            let x = parse_lit(s)?;
            if x == 0 {
                closed = true;
                break;
            }
            if x.unsigned_abs() as usize > nv {
                return Err(err(line, "literal out of range"));
            }
            clause.push(x);
        }
        if !closed {
            return Err(err(line, "clause missing terminating 0"));
        }
        clauses.push(clause);
    }
    let (num_vars, nc) = header.ok_or_else(|| err(0, "missing header"))?;
    if nc != clauses.len() {
        return Err(err(0, "clause count does not match header"));
    }
    Ok(Qdimacs {
        num_vars,
        prefix,
        clauses,
    })
}

pub fn build_stock(f: &CnfFormula, m: usize) -> Result<QuantifiedFormula, EncodeError> {
    QuantifiedFormula::build(
        Family::Stock {
            m,
            encoding: StockEncoding::Isolating,
        },
        f,
    )
}

pub fn build_holes(f: &CnfFormula, m: usize) -> Result<QuantifiedFormula, EncodeError> {
    QuantifiedFormula::build(Family::Holes { m }, f)
}

pub fn build_cells(f: &CnfFormula, m: usize, ell: usize, u: usize) -> Result<QuantifiedFormula, EncodeError> {
    QuantifiedFormula::build(Family::Cells { m, ell, u }, f)
}

/// Single combined audit query for a `stock` certificate over `F′`.
pub fn build_stock_audit(f: &CnfFormula, v: usize, witness: &[HashFunction]) -> Result<QuantifiedFormula, EncodeError> {
    QuantifiedFormula::substituted(Family::StockAudit { v }, f, witness)
}

/// Single combined audit query for an `af` certificate over `F′`; `witness`
/// lists the `c_high` stock hashes followed by the holes hashes.
pub fn build_count_audit(
    f: &CnfFormula,
    c_low: usize,
    c_high: usize,
    witness: &[HashFunction],
) -> Result<QuantifiedFormula, EncodeError> {
    QuantifiedFormula::substituted(Family::CountAudit { c_low, c_high }, f, witness)
}
