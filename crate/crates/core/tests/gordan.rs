use std::collections::BTreeSet;

use covariants::catalog::{basis, reduction_spec, table_counts};
use covariants::diophantine::{companion, hilbert_basis};
use covariants::gordan::*;
use covariants::hilbert::bound_table;
use covariants::relations::{builtin_relations, Relevance};

#[test]
fn seed_families_nonic() {
    let (a0, a1, a2) = seed_families(9).unwrap();
    assert_eq!(a0.len(), 1);
    assert_eq!(a0.bidegree(0), (1, 9));
    assert_eq!(a1.len(), 3);
    let orders: Vec<usize> = a2.bidegrees().iter().map(|b| b.1).collect();
    let degrees: Vec<usize> = a2.bidegrees().iter().map(|b| b.0).collect();
    assert_eq!(orders, vec![9, 10, 14, 15, 17, 21, 22]);
    assert_eq!(degrees, vec![1, 2, 2, 3, 3, 3, 4]);
}

#[test]
fn seed_families_decimic_and_range() {
    let (_, _, a2) = seed_families(10).unwrap();
    let k = a2.position("K").unwrap();
    assert_eq!(a2.bidegree(k), (2, 12));
    assert!(matches!(seed_families(7), Err(GordanError::Unsupported { .. })));
}

fn profile(v: &[u64]) -> Vec<(u64, usize)> {
    let mut out: Vec<(u64, usize)> = Vec::new();
    for &x in v {
        match out.iter_mut().find(|(c, _)| *c == x) {
            Some(e) => e.1 += 1,
            None => out.push((x, 1)),
        }
    }
    out.sort();
    out
}

#[test]
fn a3_systems() {
    let s9 = build_a3_system(9, &basis(6).unwrap()).unwrap();
    assert_eq!(s9.system.lhs1, vec![9, 10, 14, 15, 17, 21, 22]);
    assert_eq!(profile(&s9.system.lhs2), vec![(2, 6), (4, 5), (6, 5), (8, 3), (10, 1), (12, 1)]);
    let s10 = build_a3_system(10, &basis(8).unwrap()).unwrap();
    assert_eq!(profile(&s10.system.lhs2), vec![(2, 14), (4, 13), (6, 12), (8, 6), (10, 7), (12, 3), (14, 3), (18, 2)]);
    // The S_6 basis is the wrong side for n = 10.
    assert!(build_a3_system(10, &basis(6).unwrap()).is_err());
}

#[test]
fn olver_small_forms_two_seeds() {
    for (n, d_max, expected) in [(5, 18, 23), (6, 15, 26)] {
        let a = olver_candidate_basis(&OlverConfig::new(n, d_max, 1)).unwrap();
        let b = olver_candidate_basis(&OlverConfig::new(n, d_max, 2)).unwrap();
        assert_eq!(a.catalog.len(), expected, "n = {n}");
        assert!(a.is_complete() && b.is_complete());
        assert_eq!(table_counts(&a.catalog).counts, table_counts(&b.catalog).counts);
    }
}

#[test]
fn shipped_sextic_basis_matches_olver() {
    let rerun = olver_candidate_basis(&OlverConfig::new(6, 15, 1)).unwrap();
    let shipped = basis(6).unwrap();
    assert_eq!(rerun.catalog.to_text("t"), shipped.to_text("t"));
}

struct Nonic {
    sys: A3System,
    comp: covariants::diophantine::Companion,
    sols: Vec<covariants::diophantine::MinimalSolution>,
}

fn nonic() -> Nonic {
    let sys = build_a3_system(9, &basis(6).unwrap()).unwrap();
    let comp = companion(&sys.system);
    let sols = hilbert_basis(&comp.system);
    Nonic { sys, comp, sols }
}

fn cells(plan: &CellPlan) -> BTreeSet<(usize, usize)> {
    plan.cells.iter().map(|c| (c.d, c.m)).collect()
}

#[test]
fn plan_is_monotone_and_sorted() {
    let s = nonic();
    let bounds = bound_table(9).unwrap();
    let degrees = reduction_spec(9).unwrap().degrees;
    let rel = builtin_relations(6).unwrap();
    let all = rel.forbidden(&s.sys.b_sources);
    let plan_with = |bounds, forbidden: &[Forbidden]| {
        let filters = PlanFilters { bounds: Some(bounds), forbidden, prime: 65521, hsop_degrees: degrees.clone() };
        plan_cells(&s.sys, &s.comp, &s.sols, &filters)
    };
    let none = plan_with(&bounds, &[]);
    let half = plan_with(&bounds, &all[..all.len() / 2]);
    let full = plan_with(&bounds, &all);
    assert!(cells(&half).is_subset(&cells(&none)));
    assert!(cells(&full).is_subset(&cells(&half)));
    assert!(full.transvectants <= half.transvectants && half.transvectants <= none.transvectants);

    let mut tight = bounds.clone();
    for e in tight.entries.values_mut() {
        e.max_degree = e.max_degree.saturating_sub(4);
    }
    let tightened = plan_with(&tight, &all);
    assert!(cells(&tightened).is_subset(&cells(&full)));
    assert!(tightened.transvectants <= full.transvectants);

    let unfiltered = unfiltered_cells(&s.sys, &s.comp, &s.sols);
    assert!(cells(&none).is_subset(&unfiltered));
    assert!(full.cells.windows(2).all(|w| w[0].target_dim <= w[1].target_dim));
}

#[test]
fn shipped_relations_are_relevant_to_the_nonic_plan() {
    let s = nonic();
    let bounds = bound_table(9).unwrap();
    let b = basis(6).unwrap();
    let relevance = VRelevance::from_plan(&s.sys, &s.comp, &s.sols, Some(&bounds), &b);
    let rel = builtin_relations(6).unwrap();
    let pos = |l: &str| b.entries.iter().position(|e| e.label == l).unwrap();
    for r in &rel.relations {
        let mono = r.monomial();
        let hit = match mono.as_slice() {
            [(x, e)] => relevance.power(pos(x), *e),
            [(x, a), (y, b)] => relevance.pair(pos(x), *a, pos(y), *b),
            _ => unreachable!(),
        };
        // Invariants are not B members, so their relations only matter
        // as spans for the others.
        let invariant = mono.iter().any(|(l, _)| b.bidegree(l).unwrap().1 == 0);
        assert!(hit || invariant, "{mono:?}");
    }
}

#[test]
fn reduce_family_dominance() {
    let cat = basis(9).unwrap();
    let g = cat.family();
    assert!(reduce_family(&[], &g, &[]).is_empty());
    let reduced = reduce_family(&[(1, 9)], &g, &[]);
    assert_eq!(reduced.members.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>(), vec!["c1"]);
    let with_extra = reduce_family(&[(1, 9)], &g, &[g.position("c16").unwrap(), 0]);
    assert_eq!(with_extra.len(), 2);

    // Every catalog member is dominated by some planned A_3 cell.
    let s = nonic();
    let bounds = bound_table(9).unwrap();
    let filters = PlanFilters { bounds: Some(&bounds), forbidden: &[], prime: 65521, hsop_degrees: vec![4, 4, 8] };
    let plan = plan_cells(&s.sys, &s.comp, &s.sols, &filters);
    let cells: Vec<(usize, usize)> = plan.cells.iter().map(|c| (c.d, c.m)).collect();
    let a3 = reduce_family(&cells, &g, &[]);
    assert!(a3.len() <= g.len());
    assert!(a3.members.iter().all(|(l, _)| cat.get(l).is_some()));
}

#[test]
fn verify_small_cells_and_resume() {
    let cat = basis(9).unwrap();
    let mut config = VerifyConfig::new(9, 20);
    config.cells = Some(vec![(4, 0), (1, 9), (2, 14), (6, 6), (8, 0)]);
    config.reduce = false;
    let mut seen = 0;
    let full = verify_catalog(&cat, &config, None, &mut |_| {
        seen += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, 5);
    assert!(full.all_verified());
    let c40 = full.certificates.iter().find(|c| (c.d, c.m) == (4, 0)).unwrap();
    assert_eq!(c40.achieved_rank, 2);

    // Resume a ledger cut after two cells; the result is identical.
    let mut partial = full.clone();
    partial.certificates.truncate(2);
    for c in &mut partial.plan[2..] {
        c.status = CellStatus::Pending;
    }
    let dir = std::env::temp_dir().join(format!("covariants-ledger-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ledger.json");
    partial.save(&path).unwrap();
    let resumed = verify_catalog(&cat, &config, Some(VerifyLedger::load(&path).unwrap()), &mut |_| Ok(())).unwrap();
    assert_eq!(resumed, full);

    let mut other = config.clone();
    other.seed = 99;
    assert!(matches!(verify_catalog(&cat, &other, Some(full), &mut |_| Ok(())), Err(GordanError::Ledger(_))));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn withheld_generator_leaves_cell_short() {
    // Dropping c17, the only new quartic invariant beyond c16, from the
    // catalog cannot be made up by products.
    let cat = basis(9).unwrap();
    let mut rigged = cat.clone();
    rigged.entries.retain(|e| e.label != "c17");
    let mut config = VerifyConfig::new(9, 10);
    config.cells = Some(vec![(4, 0)]);
    config.reduce = false;
    let ledger = verify_catalog(&rigged, &config, None, &mut |_| Ok(())).unwrap();
    assert_eq!(ledger.count(CellStatus::Short), 1);
    assert_eq!(ledger.certificates[0].achieved_rank, 1);
}
