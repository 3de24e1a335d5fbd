//! Deciding quantified formulas.
//!
//! The semantic backend works on the solution set of the formula. Substituted
//! formulas are decided exactly by bucketing solutions into cells. For an
//! existential hash block it searches for a witness: exhaustively when the
//! coefficient space has at most `exhaust_bits` bits, otherwise over `trials`
//! seeded random draws. A "false" after random search is only
//! randomized-sound. The external backend hands QDIMACS to a QBF solver.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::encoder::{cells_k, EncodeError, Family, Quant, QuantifiedFormula, Role, StockEncoding};
use crate::formula::{for_each_solution, CnfFormula, EnumOptions, FormulaError};
use crate::gf2hash::{sample_hash, FieldElem, FieldSpec, HashError, HashFunction};

pub const DEFAULT_TRIALS: usize = 64;
pub const DEFAULT_EXHAUST_BITS: usize = 16;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("{family}({param}): no witness after {trials} trials and a complete answer is required")]
    Incomplete {
        family: &'static str,
        param: usize,
        trials: usize,
    },
    #[error("{check} expects prefix shape {expected}, got {got}")]
    Shape {
        check: &'static str,
        expected: &'static str,
        got: String,
    },
    #[error("solver not found: {0}")]
    SolverMissing(PathBuf),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("unparseable solver output: {0}")]
    Unparseable(String),
    #[error("solver reported a true answer without a hash assignment")]
    NoWitness,
    #[error("witness failed re-verification for {0}")]
    WitnessRejected(&'static str),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "path")]
pub enum Backend {
    Semantic,
    External(PathBuf),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FalsePolicy {
    CompleteRequired,
    #[default]
    RandomizedAccepted,
}

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub backend: Backend,
    pub seed: u64,
    pub trials: usize,
    pub false_policy: FalsePolicy,
    pub enumeration: EnumOptions,
    /// Hash spaces with at most this many coefficient bits are searched exhaustively.
    pub exhaust_bits: usize,
    pub timeout: Duration,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            backend: Backend::Semantic,
            seed: 0,
            trials: DEFAULT_TRIALS,
            false_policy: FalsePolicy::default(),
            enumeration: EnumOptions::default(),
            exhaust_bits: DEFAULT_EXHAUST_BITS,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerMode {
    Exact,
    RandomizedSound,
    External,
}

impl AnswerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerMode::Exact => "exact",
            AnswerMode::RandomizedSound => "randomized-sound",
            AnswerMode::External => "external",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleAnswer {
    pub ret: bool,
    /// Hash witness for a true answer on a formula with an existential hash block.
    pub witness: Option<Vec<HashFunction>>,
    pub mode: AnswerMode,
    pub trials_used: usize,
}

impl OracleAnswer {
    fn exact(ret: bool) -> Self {
        OracleAnswer {
            ret,
            witness: None,
            mode: AnswerMode::Exact,
            trials_used: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Conp,
    Sigma2,
    Sigma3,
}

/// One oracle call, for query accounting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub kind: QueryKind,
    pub family: String,
    pub param: usize,
    pub query_vars: usize,
    pub ret: bool,
    pub mode: AnswerMode,
    pub trials_used: usize,
}

/// Solutions of one formula, embedded as field elements.
#[derive(Debug)]
pub struct Embedded {
    pub n: usize,
    pub elems: Vec<FieldElem>,
}

impl Embedded {
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }
}

pub struct Oracle {
    config: OracleConfig,
    ledger: Vec<CallRecord>,
    cache: FxHashMap<String, Arc<Embedded>>,
}

/// Stream for trial `j` of a search: independent of how many trials run.
pub fn trial_rng(seed: u64, family: &str, m: usize, j: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let tag = family.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&(m as u64).to_le_bytes());
    key[24..].copy_from_slice(&(j as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Cell of every solution under `h`, as `u64` when `m ≤ 64`.
enum Cells {
    Narrow(Vec<u64>),
    Wide(Vec<FieldElem>),
}

fn cells_of(h: &HashFunction, sols: &[FieldElem]) -> Cells {
    let c = h.compile();
    if h.m() <= 64 {
        Cells::Narrow(sols.iter().map(|x| c.eval_u64(x)).collect())
    } else {
        Cells::Wide(sols.iter().map(|x| c.eval(x)).collect())
    }
}

/// For each solution, how many solutions share its cell; plus the number of
/// distinct occupied cells.
fn occupancy(h: &HashFunction, sols: &[FieldElem]) -> (Vec<u32>, usize) {
    fn by_map<K: std::hash::Hash + Eq + Copy>(keys: &[K]) -> (Vec<u32>, usize) {
        let mut counts: FxHashMap<K, u32> = FxHashMap::default();
        for k in keys {
            *counts.entry(*k).or_default() += 1;
        }
        (keys.iter().map(|k| counts[k]).collect(), counts.len())
    }
    match cells_of(h, sols) {
        Cells::Narrow(keys) => {
            let m = h.m();
            if m < 32 && (1usize << m) <= 4 * keys.len().max(1) {
                let mut counts = vec![0u32; 1 << m];
                for &k in &keys {
                    counts[k as usize] += 1;
                }
                let distinct = counts.iter().filter(|&&c| c > 0).count();
                (keys.iter().map(|&k| counts[k as usize]).collect(), distinct)
            } else {
                by_map(&keys)
            }
        }
        Cells::Wide(keys) => by_map(&keys),
    }
}

fn pow2_sat(m: usize) -> u128 {
    if m >= 127 {
        u128::MAX
    } else {
        1u128 << m
    }
}

/// Every solution is alone in its cell under some hash.
pub fn isolates(sols: &[FieldElem], hashes: &[HashFunction]) -> bool {
    let n = sols.len();
    if n == 0 {
        return true;
    }
    if hashes.is_empty() {
        return false;
    }
    let cap = pow2_sat(hashes[0].m());
    let mut resolved = vec![false; n];
    let mut left = n;
    for (idx, h) in hashes.iter().enumerate() {
        // Each hash isolates at most 2^m solutions.
        if left as u128 > (hashes.len() - idx) as u128 * cap {
            return false;
        }
        let (counts, _) = occupancy(h, sols);
        for (i, &c) in counts.iter().enumerate() {
            if c == 1 && !resolved[i] {
                resolved[i] = true;
                left -= 1;
            }
        }
        if left == 0 {
            return true;
        }
    }
    false
}

/// Distinct solutions are separated by some hash.
pub fn separates(sols: &[FieldElem], hashes: &[HashFunction]) -> bool {
    let per_hash: Vec<Vec<FieldElem>> = hashes
        .iter()
        .map(|h| {
            let c = h.compile();
            sols.iter().map(|x| c.eval(x)).collect()
        })
        .collect();
    let mut seen = FxHashSet::default();
    (0..sols.len()).all(|i| seen.insert(per_hash.iter().map(|v| v[i]).collect::<Vec<_>>()))
}

/// Every cell of `{0,1}^m` receives a solution under some hash.
pub fn covers(sols: &[FieldElem], hashes: &[HashFunction], m: usize) -> bool {
    if m == 0 {
        return !sols.is_empty();
    }
    let cells = pow2_sat(m);
    if (hashes.len() as u128) * (sols.len() as u128) < cells {
        return false;
    }
    // Here 2^m ≤ |hashes|·|sols|, so a bitmap over all cells is affordable.
    let cells = cells as usize;
    let mut hit = vec![0u64; cells.div_ceil(64)];
    let mut covered = 0usize;
    for (idx, h) in hashes.iter().enumerate() {
        let Cells::Narrow(keys) = cells_of(h, sols) else {
            unreachable!("m is small here")
        };
        for k in keys {
            let (w, b) = ((k / 64) as usize, k % 64);
            if hit[w] >> b & 1 == 0 {
                hit[w] |= 1 << b;
                covered += 1;
            }
        }
        if covered == cells {
            return true;
        }
        if covered + (hashes.len() - idx - 1) * sols.len() < cells {
            return false;
        }
    }
    covered == cells
}

/// Every cell of `{0,1}^m` holds between `ell` and `u` solutions.
pub fn balanced(sols: &[FieldElem], h: &HashFunction, ell: usize, u: usize) -> bool {
    let n = sols.len() as u128;
    let cells = pow2_sat(h.m());
    if n < cells.saturating_mul(ell as u128) || n > cells.saturating_mul(u as u128) {
        return false;
    }
    let (counts, distinct) = occupancy(h, sols);
    distinct as u128 == cells && counts.iter().all(|&c| (ell..=u).contains(&(c as usize)))
}

/// Coefficient bits of a witness made of `count` hashes of shape (n, m, k).
fn space_bits(count: usize, n: usize, m: usize, k: usize) -> usize {
    count * k * n.max(m)
}

/// The `t`-th tuple in the enumeration of all coefficient assignments.
fn tuple_at(t: u64, count: usize, n: usize, m: usize, k: usize) -> Result<Vec<HashFunction>, HashError> {
    let w = n.max(m);
    let spec = FieldSpec::new(w)?;
    let mut bit = 0;
    (0..count)
        .map(|_| {
            let coeffs = (0..k)
                .map(|_| {
                    let mut a = FieldElem::ZERO;
                    for b in 0..w {
                        if t >> bit & 1 == 1 {
                            a.set_bit(b);
                        }
                        bit += 1;
                    }
                    a
                })
                .collect();
            HashFunction::with_spec(n, m, k, spec, coeffs)
        })
        .collect()
}

struct SearchOutcome {
    witness: Option<Vec<HashFunction>>,
    exhaustive: bool,
    trials_used: usize,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Self {
        Oracle {
            config,
            ledger: Vec::new(),
            cache: FxHashMap::default(),
        }
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut OracleConfig {
        &mut self.config
    }

    pub fn ledger(&self) -> &[CallRecord] {
        &self.ledger
    }

    pub fn take_ledger(&mut self) -> Vec<CallRecord> {
        std::mem::take(&mut self.ledger)
    }

    /// Solutions of `f`, cached by digest.
    pub fn solutions(&mut self, f: &CnfFormula) -> Result<Arc<Embedded>, OracleError> {
        let key = f.digest();
        if let Some(s) = self.cache.get(&key) {
            return Ok(s.clone());
        }
        let mut elems = Vec::new();
        let mut overflow = false;
        for_each_solution(f, &self.config.enumeration, None, |w| match FieldElem::from_words(w) {
            Some(e) => elems.push(e),
            None => overflow = true,
        })?;
        if overflow {
            return Err(HashError::BadWidth(f.num_vars()).into());
        }
        let e = Arc::new(Embedded {
            n: f.num_vars(),
            elems,
        });
        self.cache.insert(key, e.clone());
        Ok(e)
    }

    /// Decides a purely universal formula.
    pub fn conp_check(&mut self, q: &QuantifiedFormula) -> Result<bool, OracleError> {
        let shape = q.shape();
        if shape.iter().any(|&s| s != Quant::Forall) {
            return Err(shape_error("conp_check", "∀", &shape));
        }
        Ok(self.run(q, QueryKind::Conp)?.ret)
    }

    /// Decides a formula with at most two quantifier alternations' worth of
    /// blocks (∃∀ or ∀∃).
    pub fn two_qbf_check(&mut self, q: &QuantifiedFormula) -> Result<OracleAnswer, OracleError> {
        let shape = q.shape();
        if shape.len() > 2 {
            return Err(shape_error("two_qbf_check", "∃∀ or ∀∃", &shape));
        }
        self.run(q, QueryKind::Sigma2)
    }

    /// Decides an ∃∀∃ formula.
    pub fn three_qbf_check(&mut self, q: &QuantifiedFormula) -> Result<OracleAnswer, OracleError> {
        let shape = q.shape();
        if shape.len() > 3 || shape.first() != Some(&Quant::Exists) {
            return Err(shape_error("three_qbf_check", "∃∀∃", &shape));
        }
        self.run(q, QueryKind::Sigma3)
    }

    fn run(&mut self, q: &QuantifiedFormula, kind: QueryKind) -> Result<OracleAnswer, OracleError> {
        let ans = match self.config.backend.clone() {
            Backend::Semantic => self.decide_semantic(q)?,
            Backend::External(path) => self.decide_external(q, &path)?,
        };
        self.ledger.push(CallRecord {
            kind,
            family: q.family().tag().to_string(),
            param: q.family().param(),
            query_vars: q.query_vars(),
            ret: ans.ret,
            mode: ans.mode,
            trials_used: ans.trials_used,
        });
        Ok(ans)
    }

    /// Exact truth of a substituted formula by bucketing.
    fn substituted_truth(&self, q: &QuantifiedFormula, sols: &Embedded) -> bool {
        let hs = q.hashes();
        let s = &sols.elems;
        match q.family() {
            Family::Stock { encoding, .. } => match encoding {
                StockEncoding::Isolating => isolates(s, hs),
                StockEncoding::Guarded => separates(s, hs),
                StockEncoding::Unguarded => s.is_empty(),
            },
            Family::Holes { m } => covers(s, hs, m),
            Family::Cells { ell, u, .. } => balanced(s, &hs[0], ell, u),
            Family::CountAudit { c_low, c_high } => {
                let (stock, holes) = hs.split_at(c_high);
                isolates(s, stock) && covers(s, holes, c_low)
            }
            Family::StockNegation { .. } | Family::StockAudit { .. } => {
                unreachable!("not decided by substitution alone")
            }
        }
    }

    fn decide_semantic(&mut self, q: &QuantifiedFormula) -> Result<OracleAnswer, OracleError> {
        let sols = self.solutions(q.formula())?;
        let n = q.n();
        let count = sols.len() as u128;
        let family = q.family();
        match family {
            Family::StockNegation { m } => self.stock_negation(&sols, m),
            Family::StockAudit { v } => {
                if !isolates(&sols.elems, q.hashes()) {
                    return Ok(OracleAnswer::exact(false));
                }
                self.stock_negation(&sols, v - 1)
            }
            _ if q.is_substituted() => Ok(OracleAnswer::exact(self.substituted_truth(q, &sols))),
            Family::Stock { m, encoding } => {
                let impossible = match encoding {
                    StockEncoding::Isolating => count > (m as u128).saturating_mul(pow2_sat(m)),
                    StockEncoding::Guarded => count > pow2_sat(m * m),
                    StockEncoding::Unguarded => count > 0,
                };
                if impossible {
                    return Ok(OracleAnswer::exact(false));
                }
                self.search(q, &sols, m, n, m, 2)
            }
            Family::Holes { m } => {
                if (m as u128 + 1).saturating_mul(count) < pow2_sat(m) {
                    return Ok(OracleAnswer::exact(false));
                }
                self.search(q, &sols, m + 1, n, m, 2)
            }
            Family::Cells { m, ell, u } => {
                let cells = pow2_sat(m);
                if count < cells.saturating_mul(ell as u128) || count > cells.saturating_mul(u as u128) {
                    return Ok(OracleAnswer::exact(false));
                }
                self.search(q, &sols, 1, n, m, cells_k(n))
            }
            Family::CountAudit { .. } => unreachable!("always substituted"),
        }
    }

    /// Witness search for the existential hash block of `q`.
    fn search(
        &mut self,
        q: &QuantifiedFormula,
        sols: &Embedded,
        count: usize,
        n: usize,
        m: usize,
        k: usize,
    ) -> Result<OracleAnswer, OracleError> {
        let family = q.family();
        let check = |hs: &[HashFunction]| {
            let sq = q.substitute(hs).expect("witness shape matches family");
            self.substituted_truth(&sq, sols)
        };
        let out = self.find_tuple(family.tag(), count, n, m, k, check)?;
        match out.witness {
            Some(w) => {
                let sq = q.substitute(&w)?;
                if !self.substituted_truth(&sq, sols) {
                    return Err(OracleError::WitnessRejected(family.tag()));
                }
                Ok(OracleAnswer {
                    ret: true,
                    witness: Some(w),
                    mode: AnswerMode::Exact,
                    trials_used: out.trials_used,
                })
            }
            None => self.false_answer(family.tag(), family.param(), out),
        }
    }

    fn false_answer(&self, tag: &'static str, param: usize, out: SearchOutcome) -> Result<OracleAnswer, OracleError> {
        if out.exhaustive {
            return Ok(OracleAnswer {
                trials_used: out.trials_used,
                ..OracleAnswer::exact(false)
            });
        }
        if self.config.false_policy == FalsePolicy::CompleteRequired {
            return Err(OracleError::Incomplete {
                family: tag,
                param,
                trials: out.trials_used,
            });
        }
        Ok(OracleAnswer {
            ret: false,
            witness: None,
            mode: AnswerMode::RandomizedSound,
            trials_used: out.trials_used,
        })
    }

    fn find_tuple(
        &self,
        tag: &str,
        count: usize,
        n: usize,
        m: usize,
        k: usize,
        mut check: impl FnMut(&[HashFunction]) -> bool,
    ) -> Result<SearchOutcome, OracleError> {
        let bits = space_bits(count, n, m, k);
        if bits <= self.config.exhaust_bits {
            for t in 0..1u64 << bits {
                let hs = tuple_at(t, count, n, m, k)?;
                if check(&hs) {
                    return Ok(SearchOutcome {
                        witness: Some(hs),
                        exhaustive: true,
                        trials_used: t as usize + 1,
                    });
                }
            }
            return Ok(SearchOutcome {
                witness: None,
                exhaustive: true,
                trials_used: 1 << bits,
            });
        }
        for j in 0..self.config.trials {
            let mut rng = trial_rng(self.config.seed, tag, m, j);
            let hs = (0..count)
                .map(|_| sample_hash(n, m, k, &mut rng))
                .collect::<Result<Vec<_>, _>>()?;
            if check(&hs) {
                return Ok(SearchOutcome {
                    witness: Some(hs),
                    exhaustive: false,
                    trials_used: j + 1,
                });
            }
        }
        Ok(SearchOutcome {
            witness: None,
            exhaustive: false,
            trials_used: self.config.trials,
        })
    }

    /// Truth of `∀h₁…h_m ∃z₁ z₂…`: no `m`-tuple isolates every solution.
    fn stock_negation(&mut self, sols: &Embedded, m: usize) -> Result<OracleAnswer, OracleError> {
        let count = sols.len() as u128;
        if count == 0 {
            return Ok(OracleAnswer::exact(false));
        }
        if m == 0 || count > (m as u128).saturating_mul(pow2_sat(m)) {
            return Ok(OracleAnswer::exact(true));
        }
        if count == 1 {
            return Ok(OracleAnswer::exact(false));
        }
        // Same stream as the stock search, so both sides of φ_stock(m) agree.
        let out = self.find_tuple("stock", m, sols.n, m, 2, |hs| isolates(&sols.elems, hs))?;
        match out.witness {
            // A counterexample tuple refutes the universal claim exactly.
            Some(_) => Ok(OracleAnswer {
                trials_used: out.trials_used,
                ..OracleAnswer::exact(false)
            }),
            None if out.exhaustive => Ok(OracleAnswer {
                trials_used: out.trials_used,
                ..OracleAnswer::exact(true)
            }),
            None => {
                if self.config.false_policy == FalsePolicy::CompleteRequired {
                    return Err(OracleError::Incomplete {
                        family: "stock_negation",
                        param: m,
                        trials: out.trials_used,
                    });
                }
                Ok(OracleAnswer {
                    ret: true,
                    witness: None,
                    mode: AnswerMode::RandomizedSound,
                    trials_used: out.trials_used,
                })
            }
        }
    }

    fn decide_external(&mut self, q: &QuantifiedFormula, path: &Path) -> Result<OracleAnswer, OracleError> {
        let verdict = external_solve(q, path, self.config.timeout)?;
        let mut ans = OracleAnswer {
            ret: verdict.ret,
            witness: None,
            mode: AnswerMode::External,
            trials_used: 0,
        };
        if verdict.ret && !q.is_substituted() && q.shape().first() == Some(&Quant::Exists) {
            ans.witness = witness_from_assignment(q, &verdict.assignment)?;
            if let Some(w) = &ans.witness {
                let sols = self.solutions(q.formula())?;
                let sq = q.substitute(w)?;
                if !self.substituted_truth(&sq, &sols) {
                    return Err(OracleError::WitnessRejected(q.family().tag()));
                }
            }
        }
        Ok(ans)
    }
}

fn shape_error(check: &'static str, expected: &'static str, shape: &[Quant]) -> OracleError {
    OracleError::Shape {
        check,
        expected,
        got: shape
            .iter()
            .map(|q| if *q == Quant::Exists { '∃' } else { '∀' })
            .collect(),
    }
}

/// Rebuilds the hash witness from a solver's outer-block assignment, if the
/// assignment covers every hash coefficient variable.
fn witness_from_assignment(q: &QuantifiedFormula, lits: &[i64]) -> Result<Option<Vec<HashFunction>>, OracleError> {
    let mut value: FxHashMap<usize, bool> = FxHashMap::default();
    for &l in lits {
        value.insert(l.unsigned_abs() as usize, l > 0);
    }
    let n = q.n();
    let shapes = q.family().witness_shapes(n);
    let blocks: Vec<_> = q.prefix().into_iter().filter(|b| b.role == Role::HashCoeff).collect();
    if blocks.len() != shapes.len() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for (b, (m, k)) in blocks.iter().zip(shapes) {
        let w = n.max(m);
        let mut coeffs = vec![FieldElem::ZERO; k];
        for (j, c) in coeffs.iter_mut().enumerate() {
            for bit in 0..w {
                match value.get(&(b.first + j * w + bit)) {
                    Some(true) => c.set_bit(bit),
                    Some(false) => {}
                    None => return Ok(None),
                }
            }
        }
        out.push(HashFunction::new(n, m, k, coeffs)?);
    }
    Ok(Some(out))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalVerdict {
    pub ret: bool,
    /// Literals from `V` lines.
    pub assignment: Vec<i64>,
}

/// Parses solver stdout: a verdict line (`s cnf 1|0`, `SAT`, `UNSAT`) and
/// optional `V <lits> 0` lines.
pub fn parse_solver_output(out: &str) -> Result<ExternalVerdict, OracleError> {
    let mut ret = None;
    let mut assignment = Vec::new();
    for line in out.lines() {
        let t = line.trim();
        let toks: Vec<&str> = t.split_whitespace().collect();
        match toks.as_slice() {
            ["s", "cnf", v, ..] => {
                ret = match *v {
                    "1" => Some(true),
                    "0" => Some(false),
                    _ => return Err(OracleError::Unparseable(t.to_string())),
                }
            }
            ["SAT"] | ["SATISFIABLE"] => ret = Some(true),
            ["UNSAT"] | ["UNSATISFIABLE"] => ret = Some(false),
            ["V", rest @ ..] => {
                for s in rest {
                    let l: i64 = s.parse().map_err(|_| OracleError::Unparseable(t.to_string()))?;
                    if l != 0 {
                        assignment.push(l);
                    }
                }
            }
            _ => {}
        }
    }
    let ret = ret.ok_or_else(|| {
        let head: String = out.chars().take(200).collect();
        OracleError::Unparseable(if head.is_empty() { "<empty output>".into() } else { head })
    })?;
    Ok(ExternalVerdict { ret, assignment })
}

/// Runs `path <file.qdimacs>` with a wall-clock timeout.
pub fn external_solve(q: &QuantifiedFormula, path: &Path, timeout: Duration) -> Result<ExternalVerdict, OracleError> {
    let mut file = tempfile::Builder::new().suffix(".qdimacs").tempfile()?;
    std::io::Write::write_all(&mut file, q.to_qdimacs().as_bytes())?;
    let mut child = match Command::new(path)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound || e.kind() == std::io::ErrorKind::PermissionDenied => {
            return Err(OracleError::SolverMissing(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let status = if timeout.is_zero() { None } else { child.wait_timeout(timeout)? };
    if status.is_none() {
        let _ = child.kill();
        let _ = child.wait();
        let _ = reader.join();
        return Err(OracleError::Timeout(timeout));
    }
    let out = reader.join().unwrap_or_default();
    parse_solver_output(&out)
}
