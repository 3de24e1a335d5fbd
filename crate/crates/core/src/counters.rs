//! The three counters and their certificates.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::encoder::{build_cells, build_holes, build_stock, EncodeError};
use crate::formula::{copy_count, enumerate_with, make_copies, CnfFormula, EnumOptions, FormulaError};
use crate::gf2hash::{FieldElem, FieldSpec, HashError, HashFunction};
use crate::oracle::{AnswerMode, CallRecord, Oracle, OracleError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest tolerated `c_high − c_low` in an AF run.
pub const MAX_GAP: usize = 7;

#[derive(Debug, Error)]
pub enum CountError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{algorithm}: no loop exit for m up to {limit}")]
    NoExit { algorithm: &'static str, limit: usize },
    #[error("af: c_high - c_low = {c_high} - {c_low} exceeds 7 after {attempts} attempts")]
    RetryExhausted { c_low: usize, c_high: usize, attempts: usize },
    #[error("cells: direct enumeration found more than u = {u} solutions")]
    DirectOverflow { u: usize },
}

impl CountError {
    /// True when the failure is an oracle or search limitation rather than bad input.
    pub fn is_incomplete(&self) -> bool {
        matches!(
            self,
            CountError::NoExit { .. }
                | CountError::RetryExhausted { .. }
                | CountError::DirectOverflow { .. }
                | CountError::Oracle(OracleError::Incomplete { .. })
                | CountError::Oracle(OracleError::Timeout(_))
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Stock,
    Cells,
    Af,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Stock => "stock",
            Algorithm::Cells => "cells",
            Algorithm::Af => "af",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stock" => Ok(Algorithm::Stock),
            "cells" => Ok(Algorithm::Cells),
            "af" => Ok(Algorithm::Af),
            _ => Err(format!("unknown algorithm '{s}' (expected stock, cells or af)")),
        }
    }
}

/// `Cest = scale · 2^(num/den)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Estimate {
    pub num: u64,
    pub den: u64,
    pub scale: u128,
}

impl Estimate {
    pub fn pow2(num: u64, den: u64) -> Self {
        Estimate { num, den, scale: 1 }
    }

    pub fn zero(den: u64) -> Self {
        Estimate { num: 0, den, scale: 0 }
    }

    pub fn decimal(&self) -> f64 {
        self.scale as f64 * 2f64.powf(self.num as f64 / self.den as f64)
    }

    /// `Cest^den` as an exact integer.
    fn power(&self) -> BigUint {
        BigUint::from(self.scale).pow(self.den as u32) << self.num
    }

    /// Exact check of `count / lower_div ≤ Cest ≤ upper_mul · count`.
    pub fn brackets(&self, count: u128, lower_div: u64, upper_mul: u64) -> bool {
        let d = self.den as u32;
        let c = BigUint::from(count).pow(d);
        let cest = self.power();
        c <= BigUint::from(lower_div).pow(d) * &cest && cest <= BigUint::from(upper_mul).pow(d) * c
    }

    /// `Cest` exactly, when it is an integer (`den` divides `num`).
    pub fn as_integer(&self) -> Option<BigUint> {
        (self.num % self.den == 0).then(|| BigUint::from(self.scale) << (self.num / self.den))
    }

    fn to_json(&self) -> Value {
        json!({
            "num": self.num,
            "den": self.den,
            "decimal": self.decimal(),
            "scale": self.scale.to_string(),
        })
    }

    fn from_json(v: &Value) -> Result<Self, CertError> {
        let scale = get_str(v, "scale")?
            .parse::<u128>()
            .map_err(|_| schema("estimate.scale is not an integer"))?;
        let e = Estimate {
            num: get_u64(v, "num")?,
            den: get_u64(v, "den")?,
            scale,
        };
        if e.den == 0 {
            return Err(schema("estimate.den must be positive"));
        }
        Ok(e)
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dec = self.decimal();
        match (self.scale, self.den) {
            (0, _) => write!(f, "0"),
            (1, 1) => write!(f, "{dec:.6} (2^{})", self.num),
            (1, d) => write!(f, "{dec:.6} (2^({}/{d}))", self.num),
            (s, 1) => write!(f, "{dec:.6} ({s}*2^{})", self.num),
            (s, d) => write!(f, "{dec:.6} ({s}*2^({}/{d}))", self.num),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertParams {
    Stock { v: usize },
    Cells { m: usize, ell: usize, u: usize },
    /// No `m` succeeded; the count was enumerated directly.
    CellsDirect { ell: usize, u: usize, count: u64 },
    Af { c_low: usize, c_high: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleInfo {
    pub mode: AnswerMode,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub algorithm: Algorithm,
    pub n: usize,
    pub copies: usize,
    pub formula_digest: String,
    pub estimate: Estimate,
    pub params: CertParams,
    /// AF: the `c_high` stock hashes, then the holes hashes.
    pub hashes: Vec<HashFunction>,
    pub oracle: OracleInfo,
    pub version: String,
}

#[derive(Debug, Error)]
pub enum CertError {
    #[error("certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("certificate schema: {0}")]
    Schema(String),
    #[error("certificate hash: {0}")]
    Hash(#[from] HashError),
    #[error("formula digest mismatch: certificate has {expected}, formula is {actual}")]
    DigestMismatch { expected: String, actual: String },
}

fn schema(msg: impl Into<String>) -> CertError {
    CertError::Schema(msg.into())
}

fn get<'a>(v: &'a Value, key: &str) -> Result<&'a Value, CertError> {
    v.get(key).ok_or_else(|| schema(format!("missing field '{key}'")))
}

fn get_u64(v: &Value, key: &str) -> Result<u64, CertError> {
    get(v, key)?
        .as_u64()
        .ok_or_else(|| schema(format!("field '{key}' is not a nonnegative integer")))
}

fn get_usize(v: &Value, key: &str) -> Result<usize, CertError> {
    usize::try_from(get_u64(v, key)?).map_err(|_| schema(format!("field '{key}' too large")))
}

fn get_str<'a>(v: &'a Value, key: &str) -> Result<&'a str, CertError> {
    get(v, key)?
        .as_str()
        .ok_or_else(|| schema(format!("field '{key}' is not a string")))
}

pub fn hash_to_json(h: &HashFunction) -> Value {
    json!({
        "n": h.n(),
        "m": h.m(),
        "k": h.k(),
        "w": h.w(),
        "modulus_hex": h.spec().modulus_hex(),
        "coeffs_hex": h.coeffs_hex(),
    })
}

pub fn hash_from_json(v: &Value) -> Result<HashFunction, CertError> {
    let (n, m, k, w) = (get_usize(v, "n")?, get_usize(v, "m")?, get_usize(v, "k")?, get_usize(v, "w")?);
    let spec = FieldSpec::from_modulus_hex(get_str(v, "modulus_hex")?)?;
    if spec.width() != w || w != n.max(m) {
        return Err(schema(format!("hash field degree {} does not match w={w}, n={n}, m={m}", spec.width())));
    }
    let coeffs = get(v, "coeffs_hex")?
        .as_array()
        .ok_or_else(|| schema("coeffs_hex is not an array"))?
        .iter()
        .map(|c| {
            c.as_str()
                .and_then(FieldElem::from_hex)
                .ok_or_else(|| schema("coefficient is not hex"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HashFunction::with_spec(n, m, k, spec, coeffs)?)
}

impl Certificate {
    pub fn to_json(&self) -> Value {
        let params = match &self.params {
            CertParams::Stock { v } => json!({ "v": v }),
            CertParams::Cells { m, ell, u } => json!({ "path": "cells", "m": m, "ell": ell, "u": u }),
            CertParams::CellsDirect { ell, u, count } => {
                json!({ "path": "direct", "ell": ell, "u": u, "count": count })
            }
            CertParams::Af { c_low, c_high } => json!({ "c_low": c_low, "c_high": c_high }),
        };
        json!({
            "algorithm": self.algorithm,
            "n": self.n,
            "copies": self.copies,
            "formula_digest": self.formula_digest,
            "estimate": self.estimate.to_json(),
            "params": params,
            "hashes": self.hashes.iter().map(hash_to_json).collect::<Vec<_>>(),
            "oracle": self.oracle,
            "version": self.version,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, CertError> {
        let algorithm: Algorithm = serde_json::from_value(get(v, "algorithm")?.clone())?;
        let p = get(v, "params")?;
        let params = match algorithm {
            Algorithm::Stock => CertParams::Stock { v: get_usize(p, "v")? },
            Algorithm::Cells => match get_str(p, "path")? {
                "cells" => CertParams::Cells {
                    m: get_usize(p, "m")?,
                    ell: get_usize(p, "ell")?,
                    u: get_usize(p, "u")?,
                },
                "direct" => CertParams::CellsDirect {
                    ell: get_usize(p, "ell")?,
                    u: get_usize(p, "u")?,
                    count: get_u64(p, "count")?,
                },
                other => return Err(schema(format!("unknown cells path '{other}'"))),
            },
            Algorithm::Af => CertParams::Af {
                c_low: get_usize(p, "c_low")?,
                c_high: get_usize(p, "c_high")?,
            },
        };
        let hashes = get(v, "hashes")?
            .as_array()
            .ok_or_else(|| schema("hashes is not an array"))?
            .iter()
            .map(hash_from_json)
            .collect::<Result<Vec<_>, _>>()?;
        let digest = get_str(v, "formula_digest")?;
        if !digest.starts_with("sha256:") {
            return Err(schema("formula_digest must be 'sha256:<hex>'"));
        }
        Ok(Certificate {
            algorithm,
            n: get_usize(v, "n")?,
            copies: get_usize(v, "copies")?,
            formula_digest: digest.to_string(),
            estimate: Estimate::from_json(get(v, "estimate")?)?,
            params,
            hashes,
            oracle: serde_json::from_value(get(v, "oracle")?.clone())?,
            version: get_str(v, "version")?.to_string(),
        })
    }

    pub fn check_digest(&self, f: &CnfFormula) -> Result<(), CertError> {
        let actual = f.digest();
        if actual != self.formula_digest {
            return Err(CertError::DigestMismatch {
                expected: self.formula_digest.clone(),
                actual,
            });
        }
        Ok(())
    }
}

pub fn write_certificate(cert: &Certificate) -> String {
    let mut s = serde_json::to_string_pretty(&cert.to_json()).expect("certificate JSON is always serializable");
    s.push('\n');
    s
}

pub fn read_certificate(bytes: &[u8]) -> Result<Certificate, CertError> {
    let v: Value = serde_json::from_slice(bytes)?;
    if !v.is_object() {
        return Err(schema("top level is not an object"));
    }
    Certificate::from_json(&v)
}

/// Reads a certificate and checks it belongs to `f`.
pub fn read_certificate_for(bytes: &[u8], f: &CnfFormula) -> Result<Certificate, CertError> {
    let c = read_certificate(bytes)?;
    c.check_digest(f)?;
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountPath {
    /// The counting loop exited with a certificate.
    Loop,
    /// Cells fallback: exact enumeration bounded by `u`.
    Direct,
    /// F is unsatisfiable.
    Unsat,
}

#[derive(Clone, Debug)]
pub struct CountOutcome {
    pub estimate: Estimate,
    pub certificate: Option<Certificate>,
    pub path: CountPath,
    /// AF only: whether the gap check forced a retry.
    pub retried: bool,
    pub calls: Vec<CallRecord>,
}

fn weakest(calls: &[CallRecord], base: AnswerMode) -> AnswerMode {
    calls.iter().fold(base, |acc, c| match (acc, c.mode) {
        (AnswerMode::External, _) | (_, AnswerMode::External) => AnswerMode::External,
        (AnswerMode::RandomizedSound, _) | (_, AnswerMode::RandomizedSound) => AnswerMode::RandomizedSound,
        _ => AnswerMode::Exact,
    })
}

fn is_unsat(f: &CnfFormula, opts: &EnumOptions) -> Result<bool, FormulaError> {
    Ok(enumerate_with(f, opts, Some(1))?.is_empty())
}

fn cert_base(
    algorithm: Algorithm,
    f: &CnfFormula,
    copies: usize,
    estimate: Estimate,
    params: CertParams,
    hashes: Vec<HashFunction>,
    oracle: &Oracle,
    calls: &[CallRecord],
) -> Certificate {
    Certificate {
        algorithm,
        n: f.num_vars(),
        copies,
        formula_digest: f.digest(),
        estimate,
        params,
        hashes,
        oracle: OracleInfo {
            mode: weakest(calls, AnswerMode::Exact),
            seed: oracle.config().seed,
            trials: oracle.config().trials,
        },
        version: VERSION.to_string(),
    }
}

fn unsat_outcome(copies: usize) -> CountOutcome {
    CountOutcome {
        estimate: Estimate::zero(copies as u64),
        certificate: None,
        path: CountPath::Unsat,
        retried: false,
        calls: Vec::new(),
    }
}

/// First `m` in `1..=n′` with φ_stock(m) true, with its witness.
fn stock_exit(oracle: &mut Oracle, fp: &CnfFormula) -> Result<Option<(usize, Vec<HashFunction>)>, CountError> {
    for m in 1..=fp.num_vars() {
        let ans = oracle.two_qbf_check(&build_stock(fp, m)?)?;
        if ans.ret {
            let w = ans.witness.ok_or(OracleError::NoWitness)?;
            return Ok(Some((m, w)));
        }
    }
    Ok(None)
}

/// Stockmeyer-style counter over `⌈log₂ n⌉` copies of F.
pub fn stock_count(f: &CnfFormula, oracle: &mut Oracle) -> Result<CountOutcome, CountError> {
    let copies = copy_count(f.num_vars());
    if is_unsat(f, &oracle.config().enumeration)? {
        return Ok(unsat_outcome(copies));
    }
    let fp = make_copies(f, copies)?;
    let start = oracle.ledger().len();
    let exit = stock_exit(oracle, &fp)?;
    let calls = oracle.ledger()[start..].to_vec();
    let (v, witness) = exit.ok_or(CountError::NoExit {
        algorithm: "stock",
        limit: fp.num_vars(),
    })?;
    let estimate = Estimate::pow2(v as u64, copies as u64);
    let cert = cert_base(
        Algorithm::Stock,
        f,
        copies,
        estimate.clone(),
        CertParams::Stock { v },
        witness,
        oracle,
        &calls,
    );
    Ok(CountOutcome {
        estimate,
        certificate: Some(cert),
        path: CountPath::Loop,
        retried: false,
        calls,
    })
}

/// `ℓ` and `u` for the cells counter: `1024n` and `16384n` unless `ell_base`
/// overrides `ℓ`; `u = 16ℓ` either way.
pub fn cells_bounds(n: usize, ell_base: Option<usize>) -> (usize, usize) {
    let ell = ell_base.unwrap_or(1024 * n);
    (ell, 16 * ell)
}

pub fn equal_cells_count(f: &CnfFormula, oracle: &mut Oracle, ell_base: Option<usize>) -> Result<CountOutcome, CountError> {
    let n = f.num_vars();
    let (ell, u) = cells_bounds(n, ell_base);
    let start = oracle.ledger().len();
    for m in 1..=n {
        let ans = oracle.three_qbf_check(&build_cells(f, m, ell, u)?)?;
        if ans.ret {
            let w = ans.witness.ok_or(OracleError::NoWitness)?;
            let calls = oracle.ledger()[start..].to_vec();
            let estimate = Estimate {
                num: m as u64,
                den: 1,
                scale: ell as u128,
            };
            let cert = cert_base(
                Algorithm::Cells,
                f,
                1,
                estimate.clone(),
                CertParams::Cells { m, ell, u },
                w,
                oracle,
                &calls,
            );
            return Ok(CountOutcome {
                estimate,
                certificate: Some(cert),
                path: CountPath::Loop,
                retried: false,
                calls,
            });
        }
    }
    let calls = oracle.ledger()[start..].to_vec();
    let sols = enumerate_with(f, &oracle.config().enumeration, Some(u + 1))?;
    if sols.len() > u {
        return Err(CountError::DirectOverflow { u });
    }
    let count = sols.len() as u64;
    let estimate = Estimate {
        num: 0,
        den: 1,
        scale: count as u128,
    };
    let cert = cert_base(
        Algorithm::Cells,
        f,
        1,
        estimate.clone(),
        CertParams::CellsDirect { ell, u, count },
        Vec::new(),
        oracle,
        &calls,
    );
    Ok(CountOutcome {
        estimate,
        certificate: Some(cert),
        path: if count == 0 { CountPath::Unsat } else { CountPath::Direct },
        retried: false,
        calls,
    })
}

/// Extra attempts (trials ×4, then ×16) when the gap check fails.
pub const AF_RETRIES: usize = 2;

pub fn af_count(f: &CnfFormula, oracle: &mut Oracle) -> Result<CountOutcome, CountError> {
    let copies = copy_count(f.num_vars());
    if is_unsat(f, &oracle.config().enumeration)? {
        return Ok(unsat_outcome(copies));
    }
    let fp = make_copies(f, copies)?;
    let base_trials = oracle.config().trials;
    let start = oracle.ledger().len();
    let mut last = (0, 0);
    for attempt in 0..=AF_RETRIES {
        oracle.config_mut().trials = base_trials << (2 * attempt);
        let result = af_attempt(oracle, &fp);
        oracle.config_mut().trials = base_trials;
        let (c_low, holes, c_high, stock) = result?;
        if c_high <= c_low + MAX_GAP {
            let calls = oracle.ledger()[start..].to_vec();
            let estimate = Estimate::pow2(c_high as u64, copies as u64);
            let mut hashes = stock;
            hashes.extend(holes);
            let mut cert = cert_base(
                Algorithm::Af,
                f,
                copies,
                estimate.clone(),
                CertParams::Af { c_low, c_high },
                hashes,
                oracle,
                &calls,
            );
            cert.oracle.trials = base_trials << (2 * attempt);
            return Ok(CountOutcome {
                estimate,
                certificate: Some(cert),
                path: CountPath::Loop,
                retried: attempt > 0,
                calls,
            });
        }
        last = (c_low, c_high);
    }
    Err(CountError::RetryExhausted {
        c_low: last.0,
        c_high: last.1,
        attempts: AF_RETRIES + 1,
    })
}

type AfExits = (usize, Vec<HashFunction>, usize, Vec<HashFunction>);

fn af_attempt(oracle: &mut Oracle, fp: &CnfFormula) -> Result<AfExits, CountError> {
    let np = fp.num_vars();
    let mut c_low = np;
    let mut holes = Vec::new();
    for m in 1..=np {
        let ans = oracle.three_qbf_check(&build_holes(fp, m)?)?;
        if !ans.ret {
            c_low = m - 1;
            break;
        }
        holes = ans.witness.ok_or(OracleError::NoWitness)?;
    }
    let (c_high, stock) = stock_exit(oracle, fp)?.ok_or(CountError::NoExit {
        algorithm: "af",
        limit: np,
    })?;
    Ok((c_low, holes, c_high, stock))
}
