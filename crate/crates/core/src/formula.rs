//! CNF formulas: DIMACS I/O, evaluation, exact enumeration and the
//! `make_copies` amplification.
//!
//! Enumeration splits the formula into variable-connected components,
//! sweeps each component's local assignment space, and then walks the
//! product of the component solution lists in numeric order. A formula made
//! of `c` disjoint copies therefore costs `c` small sweeps rather than one
//! sweep over `2^(c·n)` assignments.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default bound on the number of variables swept in one component.
pub const DEFAULT_ENUM_BUDGET: usize = 24;
/// Default bound on the number of materialized solutions.
pub const DEFAULT_MAX_SOLUTIONS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing 'p cnf' header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("duplicate header")]
    DuplicateHeader,
    #[error("variable count must be positive")]
    NonPositiveVarCount,
    #[error("literal {lit} out of range for {num_vars} variables")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("unexpected token '{0}'")]
    BadToken(String),
    #[error("last clause is missing its terminating 0")]
    MissingTerminator,
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
}

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("line {line}, column {col}: {kind}")]
    Parse {
        line: usize,
        col: usize,
        kind: ParseErrorKind,
    },
    #[error("variable count must be positive")]
    NoVariables,
    #[error("literal {lit} out of range for {num_vars} variables")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("assignment width {got} does not match formula width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("enumeration budget exceeded: a component has {vars} variables (budget {budget})")]
    BudgetExceeded { vars: usize, budget: usize },
    #[error("formula has {count} solutions, more than the materialization limit {limit}")]
    TooManySolutions { count: u128, limit: usize },
    #[error("solution count does not fit in 128 bits")]
    CountOverflow,
    #[error("copy count must be at least 1")]
    ZeroCopies,
}

/// Non-fatal observations made while parsing DIMACS input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// More clauses than the header declared.
    ExtraClauses { declared: usize, found: usize },
    /// Fewer clauses than the header declared.
    MissingClauses { declared: usize, found: usize },
}

/// A literal: a nonzero signed variable index in DIMACS convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(dimacs: i32) -> Option<Lit> {
        (dimacs != 0).then_some(Lit(dimacs))
    }

    pub fn positive(var: usize) -> Lit {
        Lit(var as i32)
    }

    pub fn negative(var: usize) -> Lit {
        Lit(-(var as i32))
    }

    /// 1-based variable index.
    pub fn var(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    /// 0-based variable index, the bit position inside an [`Assignment`].
    pub fn index(self) -> usize {
        self.var() - 1
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn negate(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A fixed-width bit vector; bit `i` holds the value of variable `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    width: usize,
    words: Vec<u64>,
}

impl Assignment {
    pub fn zeros(width: usize) -> Self {
        Assignment {
            width,
            words: vec![0; width.div_ceil(64).max(1)],
        }
    }

    pub fn from_u64(width: usize, value: u64) -> Self {
        let mut a = Self::zeros(width);
        a.words[0] = if width >= 64 {
            value
        } else {
            value & ((1u64 << width) - 1)
        };
        a
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut a = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            a.set(i, b);
        }
        a
    }

    /// Builds an assignment from little-endian words, masking bits above `width`.
    pub fn from_words(width: usize, words: &[u64]) -> Self {
        let mut a = Self::zeros(width);
        for (dst, src) in a.words.iter_mut().zip(words) {
            *dst = *src;
        }
        a.mask_top();
        a
    }

    fn mask_top(&mut self) {
        let rem = self.width % 64;
        if rem != 0 {
            let last = self.width / 64;
            self.words[last] &= (1u64 << rem) - 1;
        }
        for w in self.words.iter_mut().skip(self.width.div_ceil(64)) {
            *w = 0;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.width);
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    /// Value of the literal under this assignment.
    pub fn lit(&self, lit: Lit) -> bool {
        self.get(lit.index()) == lit.is_positive()
    }
}

impl Ord for Assignment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .cmp(&other.width)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for Assignment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Most significant variable first, so `01` is `x1 = 1, x2 = 0`.
impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    has_empty_clause: bool,
    name: Option<String>,
    comments: Vec<String>,
    warnings: Vec<ParseWarning>,
}

impl PartialEq for CnfFormula {
    fn eq(&self, other: &Self) -> bool {
        self.num_vars == other.num_vars
            && self.has_empty_clause == other.has_empty_clause
            && self.clauses == other.clauses
    }
}

impl Eq for CnfFormula {}

fn dedup_clause(lits: impl IntoIterator<Item = Lit>) -> Vec<Lit> {
    let mut out: Vec<Lit> = Vec::new();
    for l in lits {
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

impl CnfFormula {
    /// Builds a formula from DIMACS-style integer clauses. An empty clause
    /// marks the formula unsatisfiable instead of being stored.
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, FormulaError> {
        if num_vars == 0 {
            return Err(FormulaError::NoVariables);
        }
        let mut f = CnfFormula {
            num_vars,
            clauses: Vec::with_capacity(clauses.len()),
            has_empty_clause: false,
            name: None,
            comments: Vec::new(),
            warnings: Vec::new(),
        };
        for clause in clauses {
            let mut lits = Vec::with_capacity(clause.len());
            for raw in clause {
                let lit = Lit::new(raw).ok_or(FormulaError::LiteralOutOfRange {
                    lit: 0,
                    num_vars,
                })?;
                if lit.var() > num_vars {
                    return Err(FormulaError::LiteralOutOfRange {
                        lit: raw as i64,
                        num_vars,
                    });
                }
                lits.push(lit);
            }
            f.push_clause(lits);
        }
        Ok(f)
    }

    fn push_clause(&mut self, lits: Vec<Lit>) {
        if lits.is_empty() {
            self.has_empty_clause = true;
        } else {
            self.clauses.push(dedup_clause(lits));
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// True when the input contained an empty clause.
    pub fn has_empty_clause(&self) -> bool {
        self.has_empty_clause
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Comment lines as read (without the leading `c`).
    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn warnings(&self) -> &[ParseWarning] {
        &self.warnings
    }

    /// Number of clauses written by [`CnfFormula::to_dimacs`].
    pub fn num_clauses(&self) -> usize {
        self.clauses.len() + usize::from(self.has_empty_clause)
    }

    /// Canonical DIMACS text: header, one clause per line, comments dropped.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.num_clauses());
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&lit.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        if self.has_empty_clause {
            out.push_str("0\n");
        }
        out
    }

    /// `sha256:<hex>` over the canonical DIMACS bytes.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_dimacs().as_bytes());
        format!("sha256:{}", hex::encode(hash))
    }

    /// Copy with literals sorted inside clauses and clauses sorted, for
    /// order-insensitive comparison.
    pub fn normalized(&self) -> CnfFormula {
        let mut clauses: Vec<Vec<Lit>> = self
            .clauses
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_by_key(|l| (l.var(), !l.is_positive()));
                c
            })
            .collect();
        clauses.sort();
        CnfFormula {
            clauses,
            name: None,
            comments: Vec::new(),
            warnings: Vec::new(),
            ..self.clone()
        }
    }

    pub fn evaluate(&self, a: &Assignment) -> Result<bool, FormulaError> {
        if a.width() != self.num_vars {
            return Err(FormulaError::WidthMismatch {
                expected: self.num_vars,
                got: a.width(),
            });
        }
        if self.has_empty_clause {
            return Ok(false);
        }
        Ok(self
            .clauses
            .iter()
            .all(|clause| clause.iter().any(|&l| a.lit(l))))
    }

    /// Removes the clause at `index`; used to probe monotonicity.
    pub fn without_clause(&self, index: usize) -> CnfFormula {
        let mut f = self.clone();
        f.clauses.remove(index);
        f
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dimacs())
    }
}

impl FromStr for CnfFormula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_dimacs_str(s)
    }
}

pub fn parse_dimacs(input: &[u8]) -> Result<CnfFormula, FormulaError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let prefix = &input[..e.valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        let col = prefix.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        FormulaError::Parse {
            line,
            col,
            kind: ParseErrorKind::InvalidUtf8,
        }
    })?;
    parse_dimacs_str(text)
}

fn parse_dimacs_str(text: &str) -> Result<CnfFormula, FormulaError> {
    let err = |line: usize, col: usize, kind: ParseErrorKind| FormulaError::Parse { line, col, kind };

    let mut header: Option<(usize, usize)> = None;
    let mut comments = Vec::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut last_pos = (1, 1);

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                comments.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
                continue;
            }
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            let col = line.len() - trimmed.len() + 1;
            if header.is_some() {
                return Err(err(line_no, col, ParseErrorKind::DuplicateHeader));
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(err(
                    line_no,
                    col,
                    ParseErrorKind::MalformedHeader(trimmed.to_string()),
                ));
            }
            let vars: i64 = fields[2].parse().map_err(|_| {
                err(line_no, col, ParseErrorKind::MalformedHeader(trimmed.to_string()))
            })?;
            let ncl: i64 = fields[3].parse().map_err(|_| {
                err(line_no, col, ParseErrorKind::MalformedHeader(trimmed.to_string()))
            })?;
            if vars <= 0 {
                return Err(err(line_no, col, ParseErrorKind::NonPositiveVarCount));
            }
            if ncl < 0 {
                return Err(err(
                    line_no,
                    col,
                    ParseErrorKind::MalformedHeader(trimmed.to_string()),
                ));
            }
            header = Some((vars as usize, ncl as usize));
            continue;
        }

        let mut offset = 0;
        for token in line.split_whitespace() {
            let start = line[offset..].find(token).map_or(offset, |p| p + offset);
            offset = start + token.len();
            let col = start + 1;
            let Some((num_vars, _)) = header else {
                return Err(err(line_no, col, ParseErrorKind::MissingHeader));
            };
            let value: i64 = token
                .parse()
                .map_err(|_| err(line_no, col, ParseErrorKind::BadToken(token.to_string())))?;
            last_pos = (line_no, col);
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if value.unsigned_abs() as usize > num_vars {
                return Err(err(
                    line_no,
                    col,
                    ParseErrorKind::LiteralOutOfRange {
                        lit: value,
                        num_vars,
                    },
                ));
            }
            current.push(Lit(value as i32));
        }
    }

    let Some((num_vars, declared)) = header else {
        return Err(err(1, 1, ParseErrorKind::MissingHeader));
    };
    if !current.is_empty() {
        return Err(err(last_pos.0, last_pos.1, ParseErrorKind::MissingTerminator));
    }

    let found = clauses.len();
    let mut f = CnfFormula::new(num_vars, Vec::new())?;
    for c in clauses {
        f.push_clause(c);
    }
    f.comments = comments;
    match found.cmp(&declared) {
        Ordering::Greater => f.warnings.push(ParseWarning::ExtraClauses { declared, found }),
        Ordering::Less => f.warnings.push(ParseWarning::MissingClauses { declared, found }),
        Ordering::Equal => {}
    }
    Ok(f)
}

/// Copy count used by the amplifying counters: `⌈log₂ n⌉`, at least 1.
pub fn copy_count(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Conjunction of `copies` variable-disjoint copies of `f`; copy `j` uses
/// variables `j·n + 1 ..= j·n + n`.
pub fn make_copies(f: &CnfFormula, copies: usize) -> Result<CnfFormula, FormulaError> {
    if copies == 0 {
        return Err(FormulaError::ZeroCopies);
    }
    let n = f.num_vars;
    let mut out = CnfFormula::new(n * copies, Vec::new())?;
    out.has_empty_clause = f.has_empty_clause;
    out.clauses.reserve(f.clauses.len() * copies);
    for j in 0..copies {
        let shift = (j * n) as i32;
        for clause in &f.clauses {
            out.clauses.push(
                clause
                    .iter()
                    .map(|l| {
                        if l.is_positive() {
                            Lit(l.0 + shift)
                        } else {
                            Lit(l.0 - shift)
                        }
                    })
                    .collect(),
            );
        }
    }
    if let Some(name) = &f.name {
        out.name = Some(format!("{name}x{copies}"));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    /// Largest component (in variables) that may be swept exhaustively.
    pub budget_vars: usize,
    /// Largest solution list that may be materialized.
    pub max_solutions: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            budget_vars: DEFAULT_ENUM_BUDGET,
            max_solutions: DEFAULT_MAX_SOLUTIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    pub formula_digest: String,
    /// Sorted by numeric value, duplicate-free.
    pub solutions: Vec<Assignment>,
    /// True when `solutions` is all of sol(F).
    pub exhaustive: bool,
    pub cap: Option<usize>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

struct Component {
    vars: Vec<usize>,
    /// Local assignments (bit `p` = `vars[p]`), ascending.
    solutions: Vec<u64>,
    complete: bool,
}

/// Per-component solution lists for `f`.
struct Decomposition {
    components: Vec<Component>,
    /// For each variable: (component, local bit).
    place: Vec<(usize, usize)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Decomposition {
    fn build(f: &CnfFormula, opts: &EnumOptions, local_cap: Option<usize>) -> Result<Self, FormulaError> {
        let n = f.num_vars;
        let mut parent: Vec<usize> = (0..n).collect();
        for clause in &f.clauses {
            let first = find(&mut parent, clause[0].index());
            for l in &clause[1..] {
                let r = find(&mut parent, l.index());
                if r != first {
                    parent[r] = first;
                }
            }
        }

        let mut comp_of_root = vec![usize::MAX; n];
        let mut components: Vec<Component> = Vec::new();
        let mut place = vec![(0, 0); n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if comp_of_root[r] == usize::MAX {
                comp_of_root[r] = components.len();
                components.push(Component {
                    vars: Vec::new(),
                    solutions: Vec::new(),
                    complete: true,
                });
            }
            let c = comp_of_root[r];
            place[v] = (c, components[c].vars.len());
            components[c].vars.push(v);
        }

        let mut masks: Vec<Vec<(u64, u64)>> = vec![Vec::new(); components.len()];
        for clause in &f.clauses {
            let c = place[clause[0].index()].0;
            let (mut pos, mut neg) = (0u64, 0u64);
            for l in clause {
                let bit = 1u64 << place[l.index()].1;
                if l.is_positive() {
                    pos |= bit;
                } else {
                    neg |= bit;
                }
            }
            masks[c].push((pos, neg));
        }

        for (comp, clauses) in components.iter_mut().zip(&masks) {
            let k = comp.vars.len();
            if k > opts.budget_vars && local_cap.is_none() {
                return Err(FormulaError::BudgetExceeded {
                    vars: k,
                    budget: opts.budget_vars,
                });
            }
            if k >= 64 {
                return Err(FormulaError::BudgetExceeded {
                    vars: k,
                    budget: opts.budget_vars.min(63),
                });
            }
            let full = (1u64 << k) - 1;
            let mut a: u64 = 0;
            loop {
                if clauses
                    .iter()
                    .all(|&(pos, neg)| (a & pos) != 0 || (!a & neg) != 0)
                {
                    comp.solutions.push(a);
                    if local_cap.is_some_and(|cap| comp.solutions.len() >= cap) && a != full {
                        comp.complete = false;
                        break;
                    }
                }
                if a == full {
                    break;
                }
                a += 1;
            }
        }
        Ok(Decomposition { components, place })
    }

    fn count(&self) -> Result<u128, FormulaError> {
        self.components.iter().try_fold(1u128, |acc, c| {
            acc.checked_mul(c.solutions.len() as u128)
                .ok_or(FormulaError::CountOverflow)
        })
    }

    /// Calls `emit` for each solution in ascending numeric order until it
    /// returns false.
    fn walk(&self, n: usize, emit: &mut dyn FnMut(&[u64]) -> bool) {
        if self.components.iter().any(|c| c.solutions.is_empty()) {
            return;
        }
        let mut ranges: Vec<(usize, usize)> = self
            .components
            .iter()
            .map(|c| (0, c.solutions.len()))
            .collect();
        let mut words = vec![0u64; n.div_ceil(64).max(1)];
        self.descend(n, 0, &mut ranges, &mut words, emit);
    }

    fn descend(
        &self,
        n: usize,
        depth: usize,
        ranges: &mut [(usize, usize)],
        words: &mut [u64],
        emit: &mut dyn FnMut(&[u64]) -> bool,
    ) -> bool {
        if depth == n {
            return emit(words);
        }
        let var = n - 1 - depth;
        let (c, p) = self.place[var];
        let (lo, hi) = ranges[c];
        let sols = &self.components[c].solutions;
        let mid = lo + sols[lo..hi].partition_point(|s| (s >> p) & 1 == 0);
        let (w, bit) = (var / 64, 1u64 << (var % 64));
        if lo < mid {
            ranges[c] = (lo, mid);
            words[w] &= !bit;
            if !self.descend(n, depth + 1, ranges, words, emit) {
                ranges[c] = (lo, hi);
                return false;
            }
        }
        if mid < hi {
            ranges[c] = (mid, hi);
            words[w] |= bit;
            if !self.descend(n, depth + 1, ranges, words, emit) {
                words[w] &= !bit;
                ranges[c] = (lo, hi);
                return false;
            }
            words[w] &= !bit;
        }
        ranges[c] = (lo, hi);
        true
    }
}

/// Visits every solution (as little-endian words) in ascending order.
/// Returns whether the visit was exhaustive.
pub fn for_each_solution(
    f: &CnfFormula,
    opts: &EnumOptions,
    cap: Option<usize>,
    mut visit: impl FnMut(&[u64]),
) -> Result<bool, FormulaError> {
    if f.has_empty_clause {
        return Ok(true);
    }
    let dec = Decomposition::build(f, opts, cap)?;
    let complete = dec.components.iter().all(|c| c.complete);
    let total = dec.count()?;
    if cap.is_none() && total > opts.max_solutions as u128 {
        return Err(FormulaError::TooManySolutions {
            count: total,
            limit: opts.max_solutions,
        });
    }
    let limit = cap.unwrap_or(usize::MAX);
    let mut emitted = 0usize;
    dec.walk(f.num_vars, &mut |words| {
        if emitted == limit {
            return false;
        }
        visit(words);
        emitted += 1;
        true
    });
    Ok(complete && (emitted as u128) == total)
}

pub fn enumerate_solutions(f: &CnfFormula, cap: Option<usize>) -> Result<SolutionSet, FormulaError> {
    enumerate_with(f, &EnumOptions::default(), cap)
}

pub fn enumerate_with(
    f: &CnfFormula,
    opts: &EnumOptions,
    cap: Option<usize>,
) -> Result<SolutionSet, FormulaError> {
    let n = f.num_vars;
    let mut solutions = Vec::new();
    let exhaustive = for_each_solution(f, opts, cap, |w| solutions.push(Assignment::from_words(n, w)))?;
    Ok(SolutionSet {
        formula_digest: f.digest(),
        solutions,
        exhaustive,
        cap,
    })
}

/// |sol(F)|, computed as a product over variable-connected components so it
/// does not materialize the solutions.
pub fn exact_count(f: &CnfFormula) -> Result<u128, FormulaError> {
    exact_count_with(f, &EnumOptions::default())
}

pub fn exact_count_with(f: &CnfFormula, opts: &EnumOptions) -> Result<u128, FormulaError> {
    if f.has_empty_clause {
        return Ok(0);
    }
    Decomposition::build(f, opts, None)?.count()
}
