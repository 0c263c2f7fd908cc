#![allow(dead_code)]

use std::collections::BTreeMap;

/// Reference generator table: `(degree, order) -> count`, row totals,
/// cumulative totals and column totals.
pub struct RefTable {
    pub counts: BTreeMap<(usize, usize), usize>,
    pub rows: BTreeMap<usize, usize>,
    pub cumulative: BTreeMap<usize, usize>,
    pub cols: BTreeMap<usize, usize>,
    pub total: usize,
}

pub fn ref_table(n: usize) -> RefTable {
    let text = match n {
        9 => include_str!("../data/table_s9.txt"),
        10 => include_str!("../data/table_s10.txt"),
        _ => panic!("no reference table for n = {n}"),
    };
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .skip(1)
        .take_while(|t| *t != "#")
        .map(|t| t.parse().unwrap())
        .collect();
    let num = |t: &str| if t == "-" { 0 } else { t.parse().unwrap() };
    let mut out = RefTable {
        counts: BTreeMap::new(),
        rows: BTreeMap::new(),
        cumulative: BTreeMap::new(),
        cols: BTreeMap::new(),
        total: 0,
    };
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let cells = &toks[1..=header.len()];
        if toks[0] == "tot" {
            for (m, t) in header.iter().zip(cells) {
                out.cols.insert(*m, num(t));
            }
            out.total = num(toks[header.len() + 1]);
            continue;
        }
        let d: usize = toks[0].parse().unwrap();
        for (m, t) in header.iter().zip(cells) {
            if num(t) > 0 {
                out.counts.insert((d, *m), num(t));
            }
        }
        out.rows.insert(d, num(toks[header.len() + 1]));
        out.cumulative.insert(d, num(toks[header.len() + 2]));
    }
    out
}
