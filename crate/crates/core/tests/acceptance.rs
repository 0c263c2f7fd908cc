//! One line per acceptance criterion; exits nonzero if any fails.

#[path = "common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use covariants::catalog::{basis, hsop_programs, identifications, reduction_spec};
use covariants::diophantine::{
    companion, expand_companion, expansion_count, hilbert_basis, hilbert_basis_exhaustive, minimize, DiophSystem,
};
use covariants::gordan::{
    build_a3_system, olver_candidate_basis, plan_cells, unfiltered_cells, verify_catalog, OlverConfig, PlanFilters,
    VerifyConfig,
};
use covariants::hilbert::{
    bound_table, lambda_bound, module_hilbert_numerator_auto, quotient_dim, sigma_threshold, springer_dim,
};
use covariants::program::{scale_free_compare, CovariantProgram};
use covariants::relations::builtin_relations;
use covariants::scalar_forms::{HomPoly, Scalar, Sl2, DEFAULT_PRIME};

const P: u32 = DEFAULT_PRIME;

struct Check {
    ok: bool,
    detail: String,
}

type Criterion = Box<dyn Fn() -> Check>;

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check { ok, detail: detail.into() }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let t = Instant::now();
    let mut c = f();
    let spent = t.elapsed();
    c.detail = format!("{} [{:.1}s]", c.detail, spent.as_secs_f64());
    if spent > limit {
        c.ok = false;
        c.detail += " over time limit";
    }
    c
}

fn c1() -> Check {
    let cases = [(64, 18, 1_576_149u64), (60, 14, 872_368), (501, 0, 14_510_116_319)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, m, want) in cases {
        let t = Instant::now();
        let got = springer_dim(9, d, m);
        ok &= got == BigUint::from(want) && t.elapsed() < Duration::from_secs(1);
        parts.push(format!("({d},{m})={got} want {want}"));
    }
    check(ok, parts.join("; "))
}

fn c2() -> Check {
    let got = quotient_dim(9, 60, 14, &[4, 4, 8]);
    check(got == BigInt::from(33_360), format!("quotient_dim(9,60,14,{{4,4,8}})={got}"))
}

fn c3() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, want_sols, want_exp) in [(9, 7338usize, 58_525_823u64), (10, 8985, 1_345_290_951)] {
        let t = Instant::now();
        let sys = build_a3_system(n, &basis(2 * n - 12).unwrap()).unwrap();
        let comp = companion(&sys.system);
        let sols = hilbert_basis(&comp.system);
        let exp = expansion_count(&sols, &comp.s, &comp.t);
        ok &= sols.len() == want_sols && exp == BigUint::from(want_exp) && t.elapsed() < Duration::from_secs(600);
        parts.push(format!("S{n}: {} / {exp}", sols.len()));
    }
    check(ok, parts.join("; "))
}

fn c4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    let systems = 60;
    for _ in 0..systems {
        let side = |rng: &mut ChaCha8Rng| -> Vec<u64> {
            let k = rng.gen_range(1..=3);
            (0..k).map(|_| rng.gen_range(1..=6)).collect()
        };
        let sys = DiophSystem::new(side(&mut rng), side(&mut rng)).unwrap();
        let direct = hilbert_basis(&sys);
        let mut brute = hilbert_basis_exhaustive(&sys);
        brute.sort();
        let comp = companion(&sys);
        let lifted = minimize(expand_companion(&comp, &hilbert_basis(&comp.system)));
        ok &= direct == brute && lifted == direct;
    }
    check(ok, format!("{systems} random systems against exhaustive search and companion round trip"))
}

fn c5() -> Check {
    const NONIC: [usize; 23] =
        [66, 61, 64, 63, 62, 63, 64, 63, 62, 65, 64, 63, 62, 63, 64, 63, 62, 63, 64, 63, 62, 63, 62];
    const DECIMIC: [usize; 14] = [59, 45, 46, 45, 46, 47, 46, 45, 46, 45, 46, 45, 45, 45];
    let t9 = bound_table(9).unwrap();
    let t10 = bound_table(10).unwrap();
    let mut bad = Vec::new();
    for (m, &d) in NONIC.iter().enumerate() {
        if t9.max_degree(m) != Some(d) {
            bad.push(format!("S9 m={m}: {:?} want {d}", t9.max_degree(m)));
        }
    }
    for (k, &d) in DECIMIC.iter().enumerate() {
        let m = 2 * k;
        if t10.max_degree(m) != Some(d) {
            bad.push(format!("S10 m={m}: {:?} want {d}", t10.max_degree(m)));
        }
    }
    let sizes = t9.entries.len() == 23 && t10.entries.len() == 14;
    let detail =
        if bad.is_empty() { "37 entries match".to_string() } else { format!("mismatches: {}", bad.join(", ")) };
    check(bad.is_empty() && sizes, detail)
}

fn c6() -> Check {
    let a = module_hilbert_numerator_auto(9, 1, &[4, 8, 10, 12, 12, 14, 16]).unwrap();
    let lead: Vec<String> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != BigInt::from(0))
        .take(3)
        .map(|(i, c)| format!("{c}z^{i}"))
        .collect();
    let ok = lead == ["1z^5", "4z^7", "10z^9"] && a.len() - 1 == 61;
    check(ok, format!("{} ... top degree {}", lead.join(" + "), a.len() - 1))
}

fn c7() -> Check {
    let got = (lambda_bound(9), lambda_bound(10), sigma_threshold(9), sigma_threshold(10));
    check(got == (22, 26, 25, 30), format!("lambda {} {}, sigma {} {}", got.0, got.1, got.2, got.3))
}

fn c8() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, total) in [(9, 476), (10, 510)] {
        let cat = match basis(n) {
            Ok(c) => c,
            Err(e) => return check(false, format!("S{n}: {e}")),
        };
        let headers = cat.entries.iter().all(|e| e.declared == Some(cat.program.bidegree(e.node)));
        let got = cat.table();
        let want = common::ref_table(n);
        let rows = want.rows.iter().all(|(d, c)| got.row_totals.get(d).copied().unwrap_or(0) == *c);
        let cum = want.cumulative.iter().all(|(d, c)| got.cumulative.get(d) == Some(c));
        let cols = want.cols.iter().all(|(m, c)| got.col_totals.get(m).copied().unwrap_or(0) == *c);
        let cells = got.counts == want.counts;
        ok &= headers && rows && cum && cols && cells && cat.len() == total && got.total == want.total;
        parts.push(format!(
            "S{n}: {} entries, headers {headers}, cells {cells}, totals {}",
            cat.len(),
            rows && cum && cols
        ));
    }
    check(ok, parts.join("; "))
}

/// A random program of small degree built from `f` by transvectants and products.
fn random_program(n: usize, rng: &mut ChaCha8Rng) -> CovariantProgram {
    let mut p = CovariantProgram::new(n);
    let mut nodes = vec![p.leaf()];
    for _ in 0..rng.gen_range(1..=3) {
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        let (da, ma) = p.bidegree(a);
        let (db, mb) = p.bidegree(b);
        if da + db > 4 {
            continue;
        }
        let r = rng.gen_range(0..=ma.min(mb));
        if let Ok(id) = p.transvect(a, b, r) {
            nodes.push(id);
        }
    }
    let root = *nodes.last().unwrap();
    p.with_root(root).unwrap()
}

fn c9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = true;
    let mut trials = 0;
    for n in 3..=10 {
        for _ in 0..100 {
            let prog = random_program(n, &mut rng);
            let f = HomPoly::random_mod_p(P, n, &mut rng);
            let g = Sl2::random_mod_p(P, &mut rng);
            let lhs = prog.evaluate(&f.act(&g).unwrap()).unwrap();
            let rhs = prog.evaluate(&f).unwrap().act(&g).unwrap();
            ok &= lhs == rhs;
            trials += 1;
        }
    }
    check(ok, format!("{trials} (program, form, g) triples over F_{P}"))
}

fn c10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    let trials = 300;
    for _ in 0..trials {
        let (a, b) = (rng.gen_range(0..9), rng.gen_range(0..9));
        let f = HomPoly::random_mod_p(P, a, &mut rng);
        let g = HomPoly::random_mod_p(P, b, &mut rng);
        let h = HomPoly::random_mod_p(P, b, &mut rng);
        let r = rng.gen_range(0..=a.min(b));
        let fg = f.transvectant(&g, r).unwrap();
        let gf = g.transvectant(&f, r).unwrap();
        let sign = if r % 2 == 0 { gf.clone() } else { gf.neg() };
        ok &= fg == sign;
        if r == 0 {
            ok &= fg == f.mul(&g).unwrap();
        }
        let odd = 2 * rng.gen_range(0..=a / 2) + 1;
        if odd <= a {
            ok &= f.transvectant(&f, odd).unwrap().is_zero();
        }
        let s = Scalar::from_i64(f.ring(), rng.gen_range(1..1000));
        let lin = f.transvectant(&g.scale(&s).unwrap().add(&h).unwrap(), r).unwrap();
        let sep = fg.scale(&s).unwrap().add(&f.transvectant(&h, r).unwrap()).unwrap();
        ok &= lin == sep;
    }
    check(ok, format!("{trials} random cases: antisymmetry, r=0 product, odd (f,f)_r, bilinearity"))
}

fn c11() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, d_max, want) in [(5, 18, 23), (6, 15, 26)] {
        let runs: Vec<_> =
            [1u64, 2].iter().map(|&s| olver_candidate_basis(&OlverConfig::new(n, d_max, s)).unwrap()).collect();
        let counts: Vec<_> = runs.iter().map(|r| r.catalog.table().counts).collect();
        ok &= runs.iter().all(|r| r.catalog.len() == want && r.is_complete()) && counts[0] == counts[1];
        parts.push(format!("S{n}: {} and {} generators", runs[0].catalog.len(), runs[1].catalog.len()));
    }
    check(ok, parts.join("; "))
}

fn c12() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [9, 10] {
        let cat = basis(n).unwrap();
        let ledger = verify_catalog(&cat, &VerifyConfig::new(n, 2000), None, &mut |_| Ok(())).unwrap();
        ok &= ledger.all_verified() && !ledger.plan.is_empty();
        let largest = ledger.plan.iter().map(|c| c.target_dim).max().unwrap_or(0);
        parts.push(format!(
            "S{n}: {}/{} cells at full rank (largest target {largest})",
            ledger.count(covariants::gordan::CellStatus::Verified),
            ledger.plan.len()
        ));
    }
    check(ok, parts.join("; "))
}

fn c13() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, want_unfiltered, want_cells, want_tv) in
        [(9, Some(1836usize), 633usize, Some(235_493u64)), (10, None, 588, None)]
    {
        let b = basis(2 * n - 12).unwrap();
        let sys = build_a3_system(n, &b).unwrap();
        let comp = companion(&sys.system);
        let sols = hilbert_basis(&comp.system);
        let bounds = bound_table(n).unwrap();
        let forbidden = builtin_relations(2 * n - 12).map(|r| r.forbidden(&sys.b_sources)).unwrap_or_default();
        let filters = PlanFilters {
            bounds: Some(&bounds),
            forbidden: &forbidden,
            prime: P,
            hsop_degrees: reduction_spec(n).unwrap().degrees,
        };
        let plan = plan_cells(&sys, &comp, &sols, &filters);
        let mut line = format!("S{n}: {} cells want {want_cells}", plan.len());
        ok &= plan.len() == want_cells;
        if let Some(u) = want_unfiltered {
            let got = unfiltered_cells(&sys, &comp, &sols).len();
            ok &= got == u;
            line = format!("S{n}: unfiltered {got} want {u}, {} cells want {want_cells}", plan.len());
        }
        if let Some(tv) = want_tv {
            ok &= plan.transvectants == tv;
            line += &format!(", {} transvectants want {tv}", plan.transvectants);
        }
        if forbidden.is_empty() {
            line += ", no shipped relations";
        }
        parts.push(line);
    }
    check(ok, parts.join("; "))
}

fn c14() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut ok = true;
    let mut count = 0;
    for n in [9, 10] {
        let hsop = hsop_programs(n).unwrap();
        let cat = basis(n).unwrap();
        let form = HomPoly::random_mod_p(P, n, &mut rng);
        for (_, id, d) in hsop.invariants() {
            let v = hsop.program.evaluate_nodes(&form, &[*id]).unwrap();
            ok &= v[0].order() == 0 && hsop.program.bidegree(*id) == (d.unwrap(), 0);
        }
        for _ in 0..20 {
            let form = HomPoly::random_mod_p(P, n, &mut rng);
            for (c, p) in identifications(n) {
                let a = cat.program.evaluate_nodes(&form, &[cat.node(c).unwrap()]).unwrap();
                let b = hsop.program.evaluate_nodes(&form, &[hsop.node(p).unwrap()]).unwrap();
                ok &= !a[0].is_zero() && scale_free_compare(&a[0], &b[0]);
            }
        }
        count += identifications(n).len();
    }
    check(ok, format!("invariant programs well formed; {count} identifications at 20 forms each"))
}

fn main() {
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("Springer dimensions", Box::new(c1)),
        ("quotient dimension", Box::new(move || timed(secs(1), c2))),
        ("Diophantine Hilbert bases", Box::new(move || timed(secs(1200), c3))),
        ("companion lemma oracle", Box::new(move || timed(secs(60), c4))),
        ("bound tables", Box::new(move || timed(secs(300), c5))),
        ("Hilbert numerator of order-1 covariants", Box::new(c6)),
        ("order bounds", Box::new(c7)),
        ("catalog integrity", Box::new(move || timed(secs(10), c8))),
        ("equivariance", Box::new(move || timed(secs(60), c9))),
        ("transvectant identities", Box::new(c10)),
        ("Olver reproduction", Box::new(move || timed(secs(600), c11))),
        ("spanning verification", Box::new(c12)),
        ("pipeline counts", Box::new(c13)),
        ("h.s.o.p. programs", Box::new(c14)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let c = run();
        if !c.ok {
            failed += 1;
        }
        println!("criterion {:>2} {}: {} ({})", i + 1, if c.ok { "PASS" } else { "FAIL" }, name, c.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
