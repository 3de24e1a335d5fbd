//! Certificate auditors and audit-complexity accounting.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counters::{cells_bounds, Algorithm, CertParams, Certificate, Estimate};
use crate::encoder::{
    build_count_audit, build_stock_audit, EncodeError, Family, QuantifiedFormula, StockEncoding, VarBudget,
};
use crate::formula::{copy_count, enumerate_with, make_copies, CnfFormula, FormulaError};
use crate::oracle::{AnswerMode, Backend, CallRecord, Oracle, OracleError};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    VariantMismatch,
    DigestMismatch,
    BadParams,
    ArityViolation,
    InconsistentEstimate,
    GapExceeded,
    PoscheckFailed,
    NegcheckFailed,
    CombinedCheckFailed,
    CountMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Verified,
    Rejected { reason: RejectReason, detail: String },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn reason(&self) -> Option<RejectReason> {
        match self {
            Verdict::Verified => None,
            Verdict::Rejected { reason, .. } => Some(*reason),
        }
    }
}

/// Bounds on the solution count of the audited formula (`F′` for stock and af).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpliedBounds {
    pub lower: String,
    pub upper: String,
}

impl ImpliedBounds {
    fn new(lower: BigUint, upper: BigUint) -> Self {
        ImpliedBounds {
            lower: lower.to_string(),
            upper: upper.to_string(),
        }
    }

    pub fn lower(&self) -> BigUint {
        self.lower.parse().expect("bounds are decimal")
    }

    pub fn upper(&self) -> BigUint {
        self.upper.parse().expect("bounds are decimal")
    }

    pub fn contains(&self, count: u128) -> bool {
        let c = BigUint::from(count);
        self.lower() <= c && c <= self.upper()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub algorithm: Algorithm,
    pub verdict: Verdict,
    pub mode: AnswerMode,
    /// Variables of the Σ₂ part of the audit (the audit complexity).
    pub query_vars: Option<VarBudget>,
    /// Variables of the single combined audit formula.
    pub combined_vars: Option<VarBudget>,
    /// Cells only: `m` recovered from the estimate.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m_inverted: Option<usize>,
    pub implied_bounds: Option<ImpliedBounds>,
    pub oracle_calls: Vec<CallRecord>,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report JSON is always serializable");
        s.push('\n');
        s
    }
}

struct Audit<'a> {
    oracle: &'a mut Oracle,
    start: usize,
    report: AuditReport,
}

impl<'a> Audit<'a> {
    fn new(oracle: &'a mut Oracle, algorithm: Algorithm) -> Self {
        let start = oracle.ledger().len();
        Audit {
            oracle,
            start,
            report: AuditReport {
                algorithm,
                verdict: Verdict::Verified,
                mode: AnswerMode::Exact,
                query_vars: None,
                combined_vars: None,
                m_inverted: None,
                implied_bounds: None,
                oracle_calls: Vec::new(),
            },
        }
    }

    fn finish(mut self, verdict: Verdict, bounds: Option<ImpliedBounds>) -> AuditReport {
        let calls = self.oracle.ledger()[self.start..].to_vec();
        self.report.mode = calls.iter().fold(AnswerMode::Exact, |acc, c| match (acc, c.mode) {
            (AnswerMode::External, _) | (_, AnswerMode::External) => AnswerMode::External,
            (AnswerMode::RandomizedSound, _) | (_, AnswerMode::RandomizedSound) => AnswerMode::RandomizedSound,
            _ => AnswerMode::Exact,
        });
        self.report.oracle_calls = calls;
        if verdict.is_verified() {
            self.report.implied_bounds = bounds;
        }
        self.report.verdict = verdict;
        self.report
    }

    fn external(&self) -> bool {
        matches!(self.oracle.config().backend, Backend::External(_))
    }
}

fn reject(reason: RejectReason, detail: impl Into<String>) -> Verdict {
    Verdict::Rejected {
        reason,
        detail: detail.into(),
    }
}

/// Checks shared by all three auditors; returns the expected copy count.
fn common_checks(f: &CnfFormula, cert: &Certificate, alg: Algorithm) -> Result<usize, Verdict> {
    if cert.algorithm != alg {
        return Err(reject(
            RejectReason::VariantMismatch,
            format!("expected a {} certificate, got {}", alg.as_str(), cert.algorithm.as_str()),
        ));
    }
    if let Err(e) = cert.check_digest(f) {
        return Err(reject(RejectReason::DigestMismatch, e.to_string()));
    }
    let n = f.num_vars();
    let copies = if alg == Algorithm::Cells { 1 } else { copy_count(n) };
    if cert.n != n || cert.copies != copies {
        return Err(reject(
            RejectReason::BadParams,
            format!("n={} copies={} but the formula needs n={n} copies={copies}", cert.n, cert.copies),
        ));
    }
    Ok(copies)
}

fn witness_verdict(e: EncodeError) -> Verdict {
    match e {
        EncodeError::WitnessArity { .. } | EncodeError::WitnessShape { .. } => {
            reject(RejectReason::ArityViolation, e.to_string())
        }
        other => reject(RejectReason::BadParams, other.to_string()),
    }
}

fn pow2(e: usize) -> BigUint {
    BigUint::from(1u8) << e
}

/// Count bounds certified by a stock exit at `v`: `⌊2^(v−3)⌋+1 ≤ N ≤ v·2^v`.
pub fn stock_bounds(v: usize) -> ImpliedBounds {
    let lower = if v >= 3 { pow2(v - 3) } else { BigUint::from(0u8) } + 1u8;
    ImpliedBounds::new(lower, BigUint::from(v) * pow2(v))
}

/// Count bounds certified by an af run: `⌈2^c_low/(c_low+1)⌉ ≤ N ≤ c_high·2^c_high`.
pub fn af_bounds(c_low: usize, c_high: usize) -> ImpliedBounds {
    let d = BigUint::from(c_low + 1);
    let lower = (pow2(c_low) + &d - 1u8) / d;
    ImpliedBounds::new(lower, BigUint::from(c_high) * pow2(c_high))
}

/// Cells bounds `ℓ·2^m ≤ N ≤ u·2^m`.
pub fn cells_bounds_implied(m: usize, ell: usize, u: usize) -> ImpliedBounds {
    ImpliedBounds::new(BigUint::from(ell) * pow2(m), BigUint::from(u) * pow2(m))
}

pub fn stock_audit(f: &CnfFormula, cert: &Certificate, oracle: &mut Oracle) -> Result<AuditReport, AuditError> {
    let mut a = Audit::new(oracle, Algorithm::Stock);
    let copies = match common_checks(f, cert, Algorithm::Stock) {
        Ok(c) => c,
        Err(v) => return Ok(a.finish(v, None)),
    };
    let CertParams::Stock { v } = cert.params else {
        return Ok(a.finish(reject(RejectReason::VariantMismatch, "params are not stock params"), None));
    };
    let fp = make_copies(f, copies)?;
    let np = fp.num_vars();
    if !(1..=np).contains(&v) {
        return Ok(a.finish(reject(RejectReason::BadParams, format!("v={v} outside 1..={np}")), None));
    }
    a.report.query_vars = Some(Family::StockNegation { m: v - 1 }.budget(np, false));
    a.report.combined_vars = Some(Family::StockAudit { v }.budget(np, true));
    if cert.estimate != Estimate::pow2(v as u64, copies as u64) {
        let d = format!("estimate {} does not match v={v}", cert.estimate);
        return Ok(a.finish(reject(RejectReason::InconsistentEstimate, d), None));
    }
    let pos = match QuantifiedFormula::substituted(
        Family::Stock {
            m: v,
            encoding: StockEncoding::default(),
        },
        &fp,
        &cert.hashes,
    ) {
        Ok(q) => q,
        Err(e) => return Ok(a.finish(witness_verdict(e), None)),
    };
    let bounds = Some(stock_bounds(v));
    if a.external() {
        let q = build_stock_audit(&fp, v, &cert.hashes)?;
        let ok = a.oracle.two_qbf_check(&q)?.ret;
        let verdict = if ok {
            Verdict::Verified
        } else {
            reject(RejectReason::CombinedCheckFailed, "combined audit query is false")
        };
        return Ok(a.finish(verdict, bounds));
    }
    if !a.oracle.conp_check(&pos)? {
        let d = format!("hashes do not isolate every solution at v={v}");
        return Ok(a.finish(reject(RejectReason::PoscheckFailed, d), None));
    }
    let neg = QuantifiedFormula::build(Family::StockNegation { m: v - 1 }, &fp)?;
    if !a.oracle.two_qbf_check(&neg)?.ret {
        let d = format!("some hash tuple isolates at v-1={}", v - 1);
        return Ok(a.finish(reject(RejectReason::NegcheckFailed, d), None));
    }
    Ok(a.finish(Verdict::Verified, bounds))
}

/// `m` recovered from a cells estimate; `None` if the estimate is not of the expected form.
pub fn invert_cells_m(est: &Estimate, n: usize, ell: usize, u: usize) -> Option<usize> {
    let cest = est.as_integer()?;
    if (ell, u) == cells_bounds(n, None) {
        let q = cest / BigUint::from(n);
        let lg = q.bits().checked_sub(1)? as usize;
        lg.checked_sub(10)
    } else {
        let ell = BigUint::from(ell);
        if &cest % &ell != BigUint::from(0u8) {
            return None;
        }
        let q = cest / ell;
        let lg = q.bits().checked_sub(1)? as usize;
        (q == pow2(lg)).then_some(lg)
    }
}

pub fn equal_cells_audit(f: &CnfFormula, cert: &Certificate, oracle: &mut Oracle) -> Result<AuditReport, AuditError> {
    let mut a = Audit::new(oracle, Algorithm::Cells);
    if let Err(v) = common_checks(f, cert, Algorithm::Cells) {
        return Ok(a.finish(v, None));
    }
    let n = f.num_vars();
    match cert.params {
        CertParams::Cells { m, ell, u } => {
            if !(1..=n).contains(&m) || ell == 0 || u <= ell {
                let d = format!("m={m} ell={ell} u={u} invalid for n={n}");
                return Ok(a.finish(reject(RejectReason::BadParams, d), None));
            }
            let family = Family::Cells { m, ell, u };
            a.report.query_vars = Some(family.budget(n, true));
            a.report.combined_vars = a.report.query_vars.clone();
            let inverted = invert_cells_m(&cert.estimate, n, ell, u);
            a.report.m_inverted = inverted;
            let well_formed = cert.estimate.den == 1 && cert.estimate.scale == ell as u128;
            if inverted != Some(m) || !well_formed {
                let d = format!("estimate {} inverts to m={inverted:?}, certificate says m={m}", cert.estimate);
                return Ok(a.finish(reject(RejectReason::InconsistentEstimate, d), None));
            }
            let q = match QuantifiedFormula::substituted(family, f, &cert.hashes) {
                Ok(q) => q,
                Err(e) => return Ok(a.finish(witness_verdict(e), None)),
            };
            if !a.oracle.two_qbf_check(&q)?.ret {
                let d = format!("some cell count is outside [{ell}, {u}] at m={m}");
                return Ok(a.finish(reject(RejectReason::PoscheckFailed, d), None));
            }
            Ok(a.finish(Verdict::Verified, Some(cells_bounds_implied(m, ell, u))))
        }
        CertParams::CellsDirect { ell, u, count } => {
            a.report.query_vars = Some(direct_budget(n));
            a.report.combined_vars = a.report.query_vars.clone();
            let expected = Estimate {
                num: 0,
                den: 1,
                scale: count as u128,
            };
            if cert.estimate != expected || !cert.hashes.is_empty() || count > u as u64 || ell == 0 || u <= ell {
                let d = format!("direct certificate with count={count} ell={ell} u={u} is malformed");
                return Ok(a.finish(reject(RejectReason::InconsistentEstimate, d), None));
            }
            let sols = enumerate_with(f, &a.oracle.config().enumeration, Some(u + 1))?;
            if sols.len() as u64 != count {
                let d = format!("recount found {} solutions, certificate says {count}", sols.len());
                return Ok(a.finish(reject(RejectReason::CountMismatch, d), None));
            }
            let c = BigUint::from(count);
            Ok(a.finish(Verdict::Verified, Some(ImpliedBounds::new(c.clone(), c))))
        }
        _ => Ok(a.finish(reject(RejectReason::VariantMismatch, "params are not cells params"), None)),
    }
}

fn direct_budget(n: usize) -> VarBudget {
    VarBudget {
        family: "direct".to_string(),
        m: 0,
        n,
        hash_vars: 0,
        cell_vars: 0,
        assign_vars: n,
        total: n,
    }
}

pub fn count_audit(f: &CnfFormula, cert: &Certificate, oracle: &mut Oracle) -> Result<AuditReport, AuditError> {
    let mut a = Audit::new(oracle, Algorithm::Af);
    let copies = match common_checks(f, cert, Algorithm::Af) {
        Ok(c) => c,
        Err(v) => return Ok(a.finish(v, None)),
    };
    let CertParams::Af { c_low, c_high } = cert.params else {
        return Ok(a.finish(reject(RejectReason::VariantMismatch, "params are not af params"), None));
    };
    let fp = make_copies(f, copies)?;
    let np = fp.num_vars();
    if !(1..=np).contains(&c_high) || c_low > np {
        let d = format!("c_low={c_low} c_high={c_high} outside range for n'={np}");
        return Ok(a.finish(reject(RejectReason::BadParams, d), None));
    }
    a.report.query_vars = Some(Family::Holes { m: c_low }.budget(np, true));
    a.report.combined_vars = Some(Family::CountAudit { c_low, c_high }.budget(np, true));
    if c_high > c_low + crate::counters::MAX_GAP {
        let d = format!("c_high - c_low = {} - {c_low} exceeds 7", c_high);
        return Ok(a.finish(reject(RejectReason::GapExceeded, d), None));
    }
    if cert.estimate != Estimate::pow2(c_high as u64, copies as u64) {
        let d = format!("estimate {} does not match c_high={c_high}", cert.estimate);
        return Ok(a.finish(reject(RejectReason::InconsistentEstimate, d), None));
    }
    let stock_hashes = cert.hashes.get(..c_high).unwrap_or(&cert.hashes);
    let holes_hashes = cert.hashes.get(c_high..).unwrap_or(&[]);
    let queries = QuantifiedFormula::substituted(
        Family::Stock {
            m: c_high,
            encoding: StockEncoding::default(),
        },
        &fp,
        stock_hashes,
    )
    .and_then(|pos| Ok((pos, QuantifiedFormula::substituted(Family::Holes { m: c_low }, &fp, holes_hashes)?)));
    let (pos, neg) = match queries {
        Ok(q) => q,
        Err(e) => return Ok(a.finish(witness_verdict(e), None)),
    };
    let bounds = Some(af_bounds(c_low, c_high));
    if a.external() {
        let q = build_count_audit(&fp, c_low, c_high, &cert.hashes)?;
        let ok = a.oracle.two_qbf_check(&q)?.ret;
        let verdict = if ok {
            Verdict::Verified
        } else {
            reject(RejectReason::CombinedCheckFailed, "combined audit query is false")
        };
        return Ok(a.finish(verdict, bounds));
    }
    if !a.oracle.conp_check(&pos)? {
        let d = format!("stock hashes do not isolate every solution at c_high={c_high}");
        return Ok(a.finish(reject(RejectReason::PoscheckFailed, d), None));
    }
    if !a.oracle.two_qbf_check(&neg)?.ret {
        let d = format!("holes hashes leave an uncovered cell at c_low={c_low}");
        return Ok(a.finish(reject(RejectReason::NegcheckFailed, d), None));
    }
    Ok(a.finish(Verdict::Verified, bounds))
}

/// Dispatch on the certificate's algorithm.
pub fn audit(f: &CnfFormula, cert: &Certificate, oracle: &mut Oracle) -> Result<AuditReport, AuditError> {
    match cert.algorithm {
        Algorithm::Stock => stock_audit(f, cert, oracle),
        Algorithm::Cells => equal_cells_audit(f, cert, oracle),
        Algorithm::Af => count_audit(f, cert, oracle),
    }
}

/// One line of the audit-complexity table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub n_prime: usize,
    pub exit_param: usize,
    pub query_vars_total: usize,
}

pub const COMPLEXITY_CSV_HEADER: &str = "algorithm,n,n_prime,exit_param,query_vars_total";

impl ComplexityRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.algorithm.as_str(),
            self.n,
            self.n_prime,
            self.exit_param,
            self.query_vars_total
        )
    }
}

/// Audit complexity in closed form. `exit_param` is `v`, `m` or `c_low`;
/// `ell` is only used for cells (`u = 16ℓ`).
pub fn closed_form(alg: Algorithm, n_prime: usize, exit_param: usize, ell: usize) -> usize {
    match alg {
        Algorithm::Stock => {
            let v = exit_param;
            (v - 1) * 2 * n_prime.max(v - 1) + v * n_prime
        }
        Algorithm::Cells => exit_param + (16 * ell + 1 + ell) * n_prime,
        Algorithm::Af => exit_param + n_prime,
    }
}

/// Query-variable count from the encoder's prefix, at the worst-case loop exit.
pub fn worst_case_row(alg: Algorithm, n: usize, ell: usize) -> ComplexityRow {
    let (n_prime, exit_param, budget) = match alg {
        Algorithm::Stock => {
            let np = n * copy_count(n);
            (np, np, Family::StockNegation { m: np - 1 }.budget(np, false))
        }
        Algorithm::Cells => (n, n, Family::Cells { m: n, ell, u: 16 * ell }.budget(n, true)),
        Algorithm::Af => {
            let np = n * copy_count(n);
            (np, np, Family::Holes { m: np }.budget(np, true))
        }
    };
    ComplexityRow {
        algorithm: alg,
        n,
        n_prime,
        exit_param,
        query_vars_total: budget.total,
    }
}

/// Worst-case audit complexity for stock, cells and af at each `n`.
pub fn measure_audit_complexity(ns: &[usize], ell: usize) -> Vec<ComplexityRow> {
    ns.iter()
        .flat_map(|&n| [Algorithm::Stock, Algorithm::Cells, Algorithm::Af].map(|a| worst_case_row(a, n, ell)))
        .collect()
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut s = String::from(COMPLEXITY_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Checks closed forms and the af < cells < stock ordering (with stock/af ≥ n/4) for `n ≥ 8`.
pub fn check_separation(rows: &[ComplexityRow], ell: usize) -> Result<(), String> {
    for r in rows {
        let cf = closed_form(r.algorithm, r.n_prime, r.exit_param, ell);
        if cf != r.query_vars_total {
            return Err(format!("{}: measured {} but closed form {cf}", r.csv_row(), r.query_vars_total));
        }
    }
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).filter(|&n| n >= 8).collect();
    ns.dedup();
    for n in ns {
        let get = |a| rows.iter().find(|r| r.n == n && r.algorithm == a).map(|r| r.query_vars_total);
        let (Some(s), Some(c), Some(f)) = (get(Algorithm::Stock), get(Algorithm::Cells), get(Algorithm::Af)) else {
            continue;
        };
        if !(f < c && c < s) {
            return Err(format!("n={n}: expected af {f} < cells {c} < stock {s}"));
        }
        if 4 * s < n * f {
            return Err(format!("n={n}: stock/af = {s}/{f} below n/4"));
        }
    }
    Ok(())
}
