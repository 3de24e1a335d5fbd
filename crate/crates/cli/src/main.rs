use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use auditcount::auditors::{self, check_separation, complexity_csv, measure_audit_complexity, AuditError, Verdict};
use auditcount::counters::{
    af_count, cells_bounds, equal_cells_count, hash_from_json, read_certificate, stock_count, write_certificate,
    Algorithm, CertParams, CountError, CountPath,
};
use auditcount::encoder::{Family, QuantifiedFormula, StockEncoding, VarBudget};
use auditcount::formula::{exact_count_with, make_copies, parse_dimacs, CnfFormula, EnumOptions, FormulaError};
use auditcount::gf2hash::HashFunction;
use auditcount::oracle::{Backend, Oracle, OracleConfig, OracleError, DEFAULT_TRIALS};

const SOLVER_ENV: &str = "AUDITCOUNT_SOLVER";

#[derive(Parser)]
#[command(name = "auditcount", version, about = "Auditable approximate model counting")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Approximate the model count and write a certificate.
    Count(CountArgs),
    /// Check a certificate against a formula.
    Audit(AuditArgs),
    /// Exact model count by enumeration.
    Exact(ExactArgs),
    /// Emit a quantified formula as QDIMACS.
    Encode(EncodeArgs),
    /// Worst-case audit complexity table (CSV).
    Bench(BenchArgs),
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// `semantic`, `external` (uses $AUDITCOUNT_SOLVER) or `external:PATH`.
    #[arg(long, default_value = "semantic")]
    oracle: String,
    #[arg(long = "timeout-s", default_value_t = 60)]
    timeout_s: u64,
    /// Largest connected component swept during enumeration, in variables.
    #[arg(long = "max-enum")]
    max_enum: Option<usize>,
}

impl OracleArgs {
    fn config(&self) -> anyhow::Result<OracleConfig> {
        let backend = match self.oracle.as_str() {
            "semantic" => Backend::Semantic,
            "external" => match std::env::var_os(SOLVER_ENV) {
                Some(p) if !p.is_empty() => Backend::External(PathBuf::from(p)),
                _ => bail!("--oracle external needs a solver path (external:PATH or ${SOLVER_ENV})"),
            },
            s => match s.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Backend::External(PathBuf::from(p)),
                _ => bail!("unknown oracle '{s}' (expected semantic, external or external:PATH)"),
            },
        };
        let mut enumeration = EnumOptions::default();
        if let Some(b) = self.max_enum {
            enumeration.budget_vars = b;
        }
        Ok(OracleConfig {
            backend,
            seed: self.seed,
            trials: self.trials,
            enumeration,
            timeout: Duration::from_secs(self.timeout_s),
            ..OracleConfig::default()
        })
    }
}

#[derive(Args)]
struct CountArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_alg)]
    alg: Algorithm,
    /// Where to write the certificate.
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Cells only: use ℓ = ELL_BASE and u = 16ℓ instead of 1024n and 16384n.
    #[arg(long = "ell-base")]
    ell_base: Option<usize>,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long = "max-enum")]
    max_enum: Option<usize>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// stock, stock-negation, holes, cells, stock-audit or count-audit.
    #[arg(long)]
    family: String,
    #[arg(short)]
    m: usize,
    /// count-audit only: c_low (-m is c_high).
    #[arg(long = "c-low")]
    c_low: Option<usize>,
    #[arg(long = "ell-base")]
    ell_base: Option<usize>,
    /// Certificate or JSON array of hashes to substitute for the hash block.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// QDIMACS destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// DIMACS files or directories; their variable counts are the rows.
    #[arg(short, long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Extra variable counts to include.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long = "ell-base", default_value_t = 2)]
    ell_base: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_alg(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

enum Failure {
    Input(anyhow::Error),
    Incomplete(anyhow::Error),
    Rejected,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    match e {
        OracleError::Incomplete { .. } | OracleError::Timeout(_) | OracleError::Unparseable(_) => {
            Failure::Incomplete(e.into())
        }
        other => Failure::Input(other.into()),
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        match e {
            CountError::Oracle(o) => oracle_failure(o),
            e if e.is_incomplete() => Failure::Incomplete(e.into()),
            e => Failure::Input(e.into()),
        }
    }
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Oracle(o) => oracle_failure(o),
            e => Failure::Input(e.into()),
        }
    }
}

fn read_formula(path: &Path) -> anyhow::Result<CnfFormula> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_dimacs(&bytes).with_context(|| format!("{}", path.display()))
}

fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_count(a: CountArgs) -> Result<(), Failure> {
    let f = read_formula(&a.input)?;
    let mut oracle = Oracle::new(a.oracle.config()?);
    let t = Instant::now();
    let out = match a.alg {
        Algorithm::Stock => stock_count(&f, &mut oracle)?,
        Algorithm::Cells => equal_cells_count(&f, &mut oracle, a.ell_base)?,
        Algorithm::Af => af_count(&f, &mut oracle)?,
    };
    let path = match out.path {
        CountPath::Loop => "loop",
        CountPath::Direct => "direct",
        CountPath::Unsat => "unsat",
    };
    println!("algorithm: {}", a.alg.as_str());
    println!("estimate: {}", out.estimate);
    println!("path: {path}");
    if let Some(cert) = &out.certificate {
        match cert.params {
            CertParams::Stock { v } => println!("v: {v}"),
            CertParams::Cells { m, ell, u } => println!("m: {m} ell: {ell} u: {u}"),
            CertParams::CellsDirect { ell, u, count } => println!("count: {count} ell: {ell} u: {u}"),
            CertParams::Af { c_low, c_high } => println!("c_low: {c_low} c_high: {c_high}"),
        }
        println!("oracle: {}", cert.oracle.mode.as_str());
    }
    if out.retried {
        println!("retried: true");
    }
    println!("oracle calls: {}", out.calls.len());
    match (&a.cert, &out.certificate) {
        (Some(p), Some(cert)) => {
            write_out(p, &write_certificate(cert))?;
            println!("certificate: {}", p.display());
        }
        (Some(_), None) => println!("certificate: none (formula is unsatisfiable)"),
        _ => {}
    }
    eprintln!("elapsed: {:.3}s", t.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_audit(a: AuditArgs) -> Result<(), Failure> {
    let f = read_formula(&a.input)?;
    let bytes = fs::read(&a.cert).with_context(|| format!("cannot read {}", a.cert.display()))?;
    let cert = read_certificate(&bytes).with_context(|| format!("{}", a.cert.display()))?;
    let mut oracle = Oracle::new(a.oracle.config()?);
    let t = Instant::now();
    let report = auditors::audit(&f, &cert, &mut oracle)?;
    match &report.verdict {
        Verdict::Verified => println!("verdict: verified"),
        Verdict::Rejected { reason, detail } => {
            let r = serde_json::to_value(reason).map_err(anyhow::Error::from)?;
            println!("verdict: rejected ({}): {detail}", r.as_str().unwrap_or("?"));
        }
    }
    println!("mode: {}", report.mode.as_str());
    if let Some(b) = &report.implied_bounds {
        println!("implied bounds: [{}, {}]", b.lower, b.upper);
    }
    if let Some(q) = &report.query_vars {
        println!("query vars: {}", q.total);
    }
    if let Some(q) = &report.combined_vars {
        println!("combined vars: {}", q.total);
    }
    if let Some(m) = report.m_inverted {
        println!("m from estimate: {m}");
    }
    if let Some(p) = &a.out {
        write_out(p, &report.to_json())?;
    }
    eprintln!("elapsed: {:.3}s", t.elapsed().as_secs_f64());
    if report.verdict.is_verified() {
        Ok(())
    } else {
        Err(Failure::Rejected)
    }
}

fn cmd_exact(a: ExactArgs) -> Result<(), Failure> {
    let f = read_formula(&a.input)?;
    let mut opts = EnumOptions::default();
    if let Some(b) = a.max_enum {
        opts.budget_vars = b;
    }
    match exact_count_with(&f, &opts) {
        Ok(c) => {
            println!("{c}");
            Ok(())
        }
        Err(e @ (FormulaError::BudgetExceeded { .. } | FormulaError::TooManySolutions { .. })) => {
            Err(Failure::Incomplete(e.into()))
        }
        Err(e) => Err(Failure::Input(e.into())),
    }
}

/// Hashes from a certificate (with the formula it was made for) or a bare JSON array.
fn read_witness(path: &Path, f: &CnfFormula) -> anyhow::Result<(Vec<HashFunction>, CnfFormula)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_slice(&bytes).with_context(|| format!("{}", path.display()))?;
    if let Some(items) = v.as_array() {
        let hs = items.iter().map(hash_from_json).collect::<Result<Vec<_>, _>>()?;
        return Ok((hs, f.clone()));
    }
    let cert = read_certificate(&bytes).with_context(|| format!("{}", path.display()))?;
    cert.check_digest(f)?;
    Ok((cert.hashes, make_copies(f, cert.copies)?))
}

fn cmd_encode(a: EncodeArgs) -> Result<(), Failure> {
    let f = read_formula(&a.input)?;
    let m = a.m;
    let family = match a.family.as_str() {
        "stock" => Family::Stock {
            m,
            encoding: StockEncoding::default(),
        },
        "stock-negation" => Family::StockNegation { m },
        "holes" => Family::Holes { m },
        "cells" => {
            let (ell, u) = cells_bounds(f.num_vars(), a.ell_base);
            Family::Cells { m, ell, u }
        }
        "stock-audit" => Family::StockAudit { v: m },
        "count-audit" => Family::CountAudit {
            c_low: a.c_low.ok_or_else(|| anyhow!("count-audit needs --c-low"))?,
            c_high: m,
        },
        other => return Err(anyhow!("unknown family '{other}'").into()),
    };
    let q = match &a.witness {
        Some(p) => {
            let (hs, target) = read_witness(p, &f)?;
            QuantifiedFormula::substituted(family, &target, &hs).map_err(anyhow::Error::from)?
        }
        None => QuantifiedFormula::build(family, &f).map_err(anyhow::Error::from)?,
    };
    let budget = q.budget();
    let text = q.to_qdimacs();
    match &a.out {
        Some(p) => {
            write_out(p, &text)?;
            println!("{}", VarBudget::CSV_HEADER);
            println!("{}", budget.csv_row());
        }
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
            eprintln!("{}", VarBudget::CSV_HEADER);
            eprintln!("{}", budget.csv_row());
        }
    }
    Ok(())
}

fn collect_ns(inputs: &[PathBuf], out: &mut Vec<usize>) -> anyhow::Result<()> {
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot read {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            entries.sort();
            entries.retain(|e| e.extension().is_some_and(|x| x == "cnf"));
            collect_ns(&entries, out)?;
        } else {
            out.push(read_formula(p)?.num_vars());
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let mut ns = a.n.clone();
    collect_ns(&a.input, &mut ns)?;
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(anyhow!("empty corpus: no formulas or --n values").into());
    }
    if ns.contains(&0) || a.ell_base == 0 {
        return Err(anyhow!("n and --ell-base must be positive").into());
    }
    let rows = measure_audit_complexity(&ns, a.ell_base);
    let csv = complexity_csv(&rows);
    match &a.out {
        Some(p) => write_out(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Err(msg) = check_separation(&rows, a.ell_base) {
        eprintln!("invariant failed: {msg}");
        return Err(Failure::Rejected);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Cmd::Count(a) => cmd_count(a),
        Cmd::Audit(a) => cmd_audit(a),
        Cmd::Exact(a) => cmd_exact(a),
        Cmd::Encode(a) => cmd_encode(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Incomplete(e)) => {
            eprintln!("incomplete: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Rejected) => ExitCode::from(3),
    }
}
