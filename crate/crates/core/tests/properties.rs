//! Encoder, oracle and counter properties over the small end of the corpus.

use std::path::PathBuf;

use auditcount::counters::{af_count, equal_cells_count, stock_count, CertParams};
use auditcount::encoder::{
    build_cells, build_holes, build_stock, parse_qdimacs, Family, QuantifiedFormula, Role, StockEncoding,
};
use auditcount::formula::{copy_count, exact_count, make_copies, CnfFormula};
use auditcount::gf2hash::HashFunction;
use auditcount::oracle::{AnswerMode, Oracle, OracleConfig, QueryKind};

fn corpus_upto(max_n: usize) -> Vec<(String, CnfFormula)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus");
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let f: CnfFormula = std::fs::read_to_string(&p).unwrap().parse().unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), f)
        })
        .filter(|(_, f)| f.num_vars() <= max_n)
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn oracle() -> Oracle {
    Oracle::new(OracleConfig::default())
}

fn stock(m: usize) -> Family {
    Family::Stock {
        m,
        encoding: StockEncoding::Isolating,
    }
}

/// Same coefficients, more or fewer output bits.
fn retarget(h: &HashFunction, m: usize) -> HashFunction {
    HashFunction::with_spec(h.n(), m, h.k(), h.spec().clone(), h.coeffs().to_vec()).unwrap()
}

#[test]
fn stock_truth_is_monotone_in_m() {
    let mut o = oracle();
    for (name, f) in corpus_upto(4) {
        let fp = make_copies(&f, copy_count(f.num_vars())).unwrap();
        let np = fp.num_vars();
        for m in 1..np {
            let ans = o.two_qbf_check(&build_stock(&fp, m).unwrap()).unwrap();
            let Some(w) = ans.witness else { continue };
            // widen every hash by one output bit and add one more
            let mut wider: Vec<_> = w.iter().map(|h| retarget(h, m + 1)).collect();
            wider.push(HashFunction::identity(np, m + 1).unwrap());
            let q = QuantifiedFormula::substituted(stock(m + 1), &fp, &wider).unwrap();
            assert!(o.conp_check(&q).unwrap(), "{name}: extended witness fails at m={}", m + 1);
            assert!(o.two_qbf_check(&build_stock(&fp, m + 1).unwrap()).unwrap().ret, "{name} m={}", m + 1);
        }
    }
}

#[test]
fn holes_truth_is_anti_monotone_in_m() {
    let mut o = oracle();
    for (name, f) in corpus_upto(4) {
        let fp = make_copies(&f, copy_count(f.num_vars())).unwrap();
        for m in 2..=fp.num_vars() {
            let ans = o.three_qbf_check(&build_holes(&fp, m).unwrap()).unwrap();
            let Some(w) = ans.witness else { continue };
            let narrow: Vec<_> = w.iter().map(|h| retarget(h, m - 1)).collect();
            // some m of the m+1 truncated hashes still cover the (m−1)-cube
            let covered = (0..narrow.len()).any(|skip| {
                let hs: Vec<_> = narrow
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, h)| h.clone())
                    .collect();
                let q = QuantifiedFormula::substituted(Family::Holes { m: m - 1 }, &fp, &hs).unwrap();
                o.two_qbf_check(&q).unwrap().ret
            });
            assert!(
                covered || o.three_qbf_check(&build_holes(&fp, m - 1).unwrap()).unwrap().ret,
                "{name}: holes true at m={m} but not at m={}",
                m - 1
            );
        }
    }
}

#[test]
fn true_answers_recheck_on_their_witness() {
    let mut o = oracle();
    for (_, f) in corpus_upto(6) {
        let n = f.num_vars();
        for m in 1..=n {
            for q in [
                build_stock(&f, m).unwrap(),
                build_holes(&f, m).unwrap(),
                build_cells(&f, m, 1, 16).unwrap(),
            ] {
                let ans = if q.shape().len() == 3 {
                    o.three_qbf_check(&q).unwrap()
                } else {
                    o.two_qbf_check(&q).unwrap()
                };
                if let Some(w) = ans.witness {
                    assert!(ans.ret);
                    let s = q.substitute(&w).unwrap();
                    let again = if s.shape().iter().all(|&x| x == auditcount::encoder::Quant::Forall) {
                        o.conp_check(&s).unwrap()
                    } else {
                        o.two_qbf_check(&s).unwrap().ret
                    };
                    assert!(again, "{q}");
                }
            }
        }
    }
}

#[test]
fn more_trials_never_lose_a_true_answer() {
    for (_, f) in corpus_upto(5) {
        let fp = make_copies(&f, copy_count(f.num_vars())).unwrap();
        for m in 1..=fp.num_vars() {
            let q = build_stock(&fp, m).unwrap();
            let small = Oracle::new(OracleConfig {
                trials: 8,
                ..OracleConfig::default()
            })
            .two_qbf_check(&q)
            .unwrap();
            let big = Oracle::new(OracleConfig {
                trials: 32,
                ..OracleConfig::default()
            })
            .two_qbf_check(&q)
            .unwrap();
            if small.ret {
                assert!(big.ret);
                assert_eq!(small.witness, big.witness);
            }
        }
    }
}

#[test]
fn oracle_answers_are_deterministic() {
    let run = || {
        let mut o = oracle();
        for (_, f) in corpus_upto(5) {
            for m in 1..=3 {
                o.three_qbf_check(&build_holes(&f, m).unwrap()).unwrap();
                o.two_qbf_check(&build_stock(&f, m).unwrap()).unwrap();
            }
        }
        o.take_ledger()
    };
    assert_eq!(run(), run());
}

#[test]
fn stock_loop_exit_invariants() {
    let mut o = oracle();
    for (name, f) in corpus_upto(4) {
        let out = stock_count(&f, &mut o).unwrap();
        let cert = out.certificate.unwrap();
        let CertParams::Stock { v } = cert.params else { panic!() };
        let fp = make_copies(&f, cert.copies).unwrap();
        let pos = QuantifiedFormula::substituted(stock(v), &fp, &cert.hashes).unwrap();
        assert!(o.conp_check(&pos).unwrap(), "{name}");
        let neg = QuantifiedFormula::build(Family::StockNegation { m: v - 1 }, &fp).unwrap();
        let ans = o.two_qbf_check(&neg).unwrap();
        assert!(ans.ret, "{name}: stock({}) should be false", v - 1);
        // an exact "true" here needs the count to rule out every (v−1)-tuple
        if ans.mode == AnswerMode::Exact && v >= 2 {
            let c = exact_count(&fp).unwrap();
            assert!(c > ((v as u128 - 1) << (v - 1)), "{name}");
        }
    }
}

#[test]
fn counters_stay_within_query_budgets() {
    for (name, f) in corpus_upto(7) {
        let n = f.num_vars();
        let np = n * copy_count(n);
        let mut o = oracle();
        let s = stock_count(&f, &mut o).unwrap();
        assert!(s.calls.len() <= np, "{name}");
        assert!(s.calls.iter().all(|c| c.kind == QueryKind::Sigma2));
        let a = af_count(&f, &mut o).unwrap();
        assert!(a.retried || a.calls.len() <= 2 * np, "{name}");
        let c = equal_cells_count(&f, &mut o, Some(2)).unwrap();
        assert!(c.calls.len() <= n, "{name}");
        assert!(c.calls.iter().all(|c| c.kind == QueryKind::Sigma3));
    }
}

#[test]
fn budget_matches_emitted_prefix() {
    let (_, f) = corpus_upto(4).into_iter().next().unwrap();
    let n = f.num_vars();
    let families = [
        stock(1),
        stock(3),
        Family::StockNegation { m: 2 },
        Family::Holes { m: 2 },
        Family::Cells { m: 1, ell: 1, u: 2 },
    ];
    for fam in families {
        let q = QuantifiedFormula::build(fam, &f).unwrap();
        let parsed = parse_qdimacs(&q.to_qdimacs()).unwrap();
        let declared: usize = parsed.prefix.iter().flat_map(|(_, vs)| vs).filter(|&&v| v <= q.num_vars()).count();
        let budget = q.budget();
        assert_eq!(declared, budget.total, "{}", fam.tag());
        let tseitin: usize = q.prefix().iter().filter(|b| b.role == Role::Tseitin).map(|b| b.len).sum();
        assert_eq!(tseitin, 0);
        assert_eq!(budget.total, fam.budget(n, false).total);
    }
}
