use covariants::catalog::basis;
use covariants::relations::*;

fn label_at(b: &covariants::catalog::Catalog, bd: (usize, usize)) -> String {
    let hits: Vec<&str> =
        b.entries.iter().filter(|e| b.bidegree(&e.label) == Some(bd)).map(|e| e.label.as_str()).collect();
    assert_eq!(hits.len(), 1, "{bd:?}");
    hits[0].to_string()
}

fn power_of(set: &RelationSet, label: &str) -> Option<u32> {
    set.relations.iter().find_map(|r| match &r.kind {
        RelationKind::Power { x, e } if x == label => Some(*e),
        _ => None,
    })
}

#[test]
fn shipped_sextic_relations() {
    let b = basis(6).unwrap();
    let set = builtin_relations(6).unwrap();
    assert_eq!(set.powers(), 18);
    assert!(set.pairs() > 0);
    // Largest member first, smallest invariant last.
    assert_eq!(set.basis_order[0], label_at(&b, (12, 2)));
    assert_eq!(set.basis_order.last().unwrap(), &label_at(&b, (2, 0)));
    assert_eq!(power_of(&set, &label_at(&b, (12, 2))), Some(2));
    assert_eq!(power_of(&set, &label_at(&b, (3, 8))), Some(9));
    assert!(set.relations.iter().all(|r| r.certificate.span_rank <= r.certificate.cell_dim));
    assert_eq!(RelationSet::from_json(&set.to_json()).unwrap(), set);
}

#[test]
fn power_relations_rederived_with_another_seed() {
    let b = basis(6).unwrap();
    let fam = b.family();
    let shipped = builtin_relations(6).unwrap();
    let order = order_basis(&fam, invariant_order(6));
    let mut ctx = RelationContext::new(&fam, order, 99, RelationLimits::default()).unwrap();
    for bd in [(12, 2), (5, 2), (3, 8)] {
        let x = fam.position(&label_at(&b, bd)).unwrap();
        let r = ctx.power_relation(x, 12, &AllRelevant).unwrap().unwrap();
        let RelationKind::Power { x: lx, e } = &r.kind else { panic!() };
        assert_eq!(Some(*e), power_of(&shipped, lx), "{bd:?}");
    }
    // The ground form has no power relation.
    let f = fam.position("c1").unwrap();
    assert!(ctx.power_relation(f, 4, &AllRelevant).unwrap().is_none());
}

#[test]
fn shipped_pair_relation_recheck() {
    let b = basis(6).unwrap();
    let fam = b.family();
    let shipped = builtin_relations(6).unwrap();
    let order = order_basis(&fam, invariant_order(6));
    let mut ctx = RelationContext::new(&fam, order, 5, RelationLimits::default()).unwrap();
    let pairs: Vec<_> = shipped.relations.iter().filter(|r| matches!(r.kind, RelationKind::Pair { .. })).collect();
    for r in pairs.iter().step_by(pairs.len().div_ceil(4)) {
        let RelationKind::Pair { x, a, y, b: e } = &r.kind else { unreachable!() };
        let (xi, yi) = (fam.position(x).unwrap(), fam.position(y).unwrap());
        assert!(ctx.pair_relation(xi, *a, yi, *e).unwrap().is_some(), "{:?}", r.kind);
    }
}

#[test]
fn basis_order_rules() {
    let b = basis(6).unwrap();
    let fam = b.family();
    let order = order_basis(&fam, invariant_order(6));
    let bd = fam.bidegrees();
    let covs: Vec<(usize, usize)> = order.iter().map(|&i| bd[i]).filter(|b| b.1 > 0).collect();
    assert!(covs.windows(2).all(|w| w[0].0 > w[1].0 || (w[0].0 == w[1].0 && w[0].1 <= w[1].1)));
    let invs: Vec<usize> = order.iter().map(|&i| bd[i]).filter(|b| b.1 == 0).map(|b| b.0).collect();
    assert_eq!(invs, vec![15, 10, 6, 4, 2]);
    // Without data, invariants go by decreasing degree.
    let plain = order_basis(&fam, None);
    let invs: Vec<usize> = plain.iter().map(|&i| bd[i]).filter(|b| b.1 == 0).map(|b| b.0).collect();
    assert_eq!(invs, vec![15, 10, 6, 4, 2]);
}
