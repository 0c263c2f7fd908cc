//! Gordan's iteration for binary forms of degree 9 and 10: seed families,
//! the Diophantine step producing `A_3`, cell planning under degree/order
//! bounds and relations, Olver's algorithm for a candidate basis, and
//! spanning checks of a catalog with a resumable ledger.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{reduction_spec, table_counts, Catalog, CatalogEntry, CatalogError};
use crate::diophantine::{Companion, DiophSystem, MinimalSolution};
use crate::hilbert::springer_dim_u64;
use crate::hilbert::{quotient_dim_u64, BoundTable};
use crate::program::{Family, NodeId, ProgramError};
use crate::rankcheck::{
    cell_seed, forms_needed, verify_dimension, EvaluatedFamily, FormPool, Monomial, MonomialTable, RankError, Sampling,
    SpanCertificate, SpanSession,
};
use crate::relations::Relevance;
use crate::scalar_forms::{HomPoly, ScalarError, DEFAULT_PRIME};

#[derive(Debug, thiserror::Error)]
pub enum GordanError {
    #[error("form degree {n} outside the supported range {range}")]
    Unsupported { n: usize, range: &'static str },
    #[error("basis has {got} non-invariant members, expected {expected}")]
    BasisSize { got: usize, expected: usize },
    #[error("ledger: {0}")]
    Ledger(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

pub type Result<T> = std::result::Result<T, GordanError>;

/// Settings of an Olver run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OlverConfig {
    pub n: usize,
    pub d_max: usize,
    pub prime: u32,
    pub seed: u64,
    /// Cells with more product monomials than this are sampled instead of
    /// enumerated.
    pub product_budget: usize,
}

impl OlverConfig {
    pub fn new(n: usize, d_max: usize, seed: u64) -> Self {
        OlverConfig { n, d_max, prime: DEFAULT_PRIME, seed, product_budget: 200_000 }
    }
}

/// Per-cell outcome of an Olver run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OlverCell {
    pub d: usize,
    pub m: usize,
    pub target: usize,
    /// Rank reached by products of lower-degree generators.
    pub product_rank: usize,
    pub generators: usize,
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct OlverResult {
    pub catalog: Catalog,
    pub cells: Vec<OlverCell>,
}

impl OlverResult {
    /// Generator counts per `(degree, order)`.
    pub fn counts(&self) -> Vec<((usize, usize), usize)> {
        self.cells.iter().filter(|c| c.generators > 0).map(|c| ((c.d, c.m), c.generators)).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|c| c.complete)
    }
}

struct Generator {
    node: NodeId,
    d: usize,
    m: usize,
    /// Values at every pool form.
    values: Vec<HomPoly>,
}

fn monomial_at(gens: &[Generator], mono: &Monomial, form: usize) -> Result<HomPoly> {
    let mut acc = HomPoly::one(gens[0].values[form].ring());
    for &(i, e) in mono {
        acc = acc.mul(&gens[i].values[form].pow(e)?)?;
    }
    Ok(acc)
}

/// Olver's algorithm: generators of the subalgebra of covariants of
/// degree at most `d_max`, degree by degree. In each cell `(d, m)` the
/// products of lower generators are entered first, then transvectants
/// `(F, f)_r` with `F` a product of non-invariant generators of degree
/// `d - 1`; those raising the rank become generators, until the rank
/// reaches the dimension of the cell.
pub fn olver_candidate_basis(config: &OlverConfig) -> Result<OlverResult> {
    let (n, p) = (config.n, config.prime);
    if n == 0 {
        return Err(GordanError::Unsupported { n, range: "n >= 1" });
    }
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    for d in 2..=config.d_max {
        for m in 0..=d * n {
            let target = springer_dim_u64(n, d, m) as usize;
            if target > 0 {
                cells.push((d, m, target));
            }
        }
    }
    let pool_size = cells.iter().map(|&(_, m, t)| forms_needed(t, m)).max().unwrap_or(1).max(forms_needed(1, n));
    let pool = FormPool::generic(n, p, pool_size, config.seed);

    let mut catalog = Catalog::empty(n);
    let leaf = catalog.program.leaf();
    let mut gens = vec![Generator { node: leaf, d: 1, m: n, values: pool.forms.clone() }];
    let mut out_cells = Vec::new();

    for (d, m, target) in cells {
        let seed = cell_seed(config.seed, d, m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut session = SpanSession::new(&pool, d, m, target, seed)?;
        let forms = forms_needed(target, m);
        let batch = rayon::current_num_threads().max(1) * 4;

        let lower: Vec<(usize, usize, usize)> =
            gens.iter().enumerate().filter(|(_, g)| g.d < d).map(|(i, g)| (i, g.d, g.m)).collect();
        let table = MonomialTable::new(lower, d, m);
        let offer_batch = |session: &mut SpanSession<'_>, monos: &[Monomial], gens: &[Generator]| -> Result<usize> {
            let vals: Vec<Vec<HomPoly>> = monos
                .par_iter()
                .map(|mo| (0..forms).map(|j| monomial_at(gens, mo, j)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            let mut accepted = 0;
            for v in &vals {
                if session.is_complete() {
                    break;
                }
                accepted += session.offer("", v) as usize;
            }
            Ok(accepted)
        };
        if table.count(d, m) <= config.product_budget as f64 {
            let mut all = table.enumerate(d, m);
            all.shuffle(&mut rng);
            for chunk in all.chunks(batch) {
                if session.is_complete() {
                    break;
                }
                offer_batch(&mut session, chunk, &gens)?;
            }
        } else {
            // Sample until a long run of draws adds nothing.
            let stall_limit = 4 * target + 256;
            let mut stall = 0;
            while !session.is_complete() && stall < stall_limit {
                let monos: Vec<Monomial> = (0..batch).filter_map(|_| table.sample(d, m, &mut rng)).collect();
                let got = offer_batch(&mut session, &monos, &gens)?;
                stall = if got > 0 { 0 } else { stall + monos.len() };
            }
        }
        let product_rank = session.rank();

        let mut added = 0;
        if !session.is_complete() {
            let factors: Vec<(usize, usize, usize)> =
                gens.iter().enumerate().filter(|(_, g)| g.d < d && g.m > 0).map(|(i, g)| (i, g.d, g.m)).collect();
            let mut candidates: Vec<(Monomial, usize)> = Vec::new();
            for r in 1..=n {
                if m + 2 * r < n {
                    continue;
                }
                let mf = m + 2 * r - n;
                if mf < r {
                    continue;
                }
                let ftable = MonomialTable::new(factors.clone(), d - 1, mf);
                for mono in ftable.enumerate(d - 1, mf) {
                    candidates.push((mono, r));
                }
            }
            candidates.sort_by_key(|(mono, r)| (mono.iter().map(|&(_, e)| e).sum::<u32>(), *r));
            for chunk in candidates.chunks(batch) {
                if session.is_complete() {
                    break;
                }
                let vals: Vec<Vec<HomPoly>> = chunk
                    .par_iter()
                    .map(|(mono, r)| {
                        (0..forms)
                            .map(|j| Ok(monomial_at(&gens, mono, j)?.transvectant(&pool.forms[j], *r)?))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?;
                for ((mono, r), v) in chunk.iter().zip(vals) {
                    if session.is_complete() {
                        break;
                    }
                    if session.offer("", &v) {
                        let factors: Vec<(NodeId, u32)> = mono.iter().map(|&(i, e)| (gens[i].node, e)).collect();
                        let f_node = catalog.program.product(&factors)?;
                        let node = catalog.program.transvect(f_node, leaf, *r)?;
                        let rest = (forms..pool.len())
                            .into_par_iter()
                            .map(|j| Ok(monomial_at(&gens, mono, j)?.transvectant(&pool.forms[j], *r)?))
                            .collect::<Result<Vec<_>>>()?;
                        let mut values = v;
                        values.extend(rest);
                        gens.push(Generator { node, d, m, values });
                        added += 1;
                    }
                }
            }
        }
        out_cells.push(OlverCell { d, m, target, product_rank, generators: added, complete: session.is_complete() });
    }

    catalog.push("c1", leaf)?;
    for (k, g) in gens.iter().enumerate().skip(1) {
        catalog.push(&format!("c{}", k + 1), g.node)?;
    }
    Ok(OlverResult { catalog, cells: out_cells })
}

/// The families `A_0 = {f}`, `A_1 = {f, H, T}` and
/// `A_2 = {f, H, T, K, (f,K)_1, (f,K)_2, (H,K)_1}` with `H = (f,f)_2`,
/// `T = (f,H)_1`, `K = (f,f)_4`, sharing one program. `A_2` is sorted by
/// order.
pub fn seed_families(n: usize) -> Result<(Family, Family, Family)> {
    if n < 8 {
        return Err(GordanError::Unsupported { n, range: "n >= 8" });
    }
    let mut fam = Family::new(n);
    let prog = &mut fam.program;
    let f = prog.leaf();
    let h = prog.transvect(f, f, 2)?;
    let t = prog.transvect(f, h, 1)?;
    let k = prog.transvect(f, f, 4)?;
    let fk1 = prog.transvect(f, k, 1)?;
    let fk2 = prog.transvect(f, k, 2)?;
    let hk1 = prog.transvect(h, k, 1)?;
    let mut a0 = fam.clone();
    a0.push("f", f);
    let mut a1 = fam.clone();
    for (l, id) in [("f", f), ("H", h), ("T", t)] {
        a1.push(l, id);
    }
    let mut a2 = fam;
    let mut members = vec![("f", f), ("H", h), ("T", t), ("K", k), ("fK1", fk1), ("fK2", fk2), ("HK1", hk1)];
    members.sort_by_key(|&(_, id)| (a2.program.bidegree(id).1, a2.program.bidegree(id).0));
    for (l, id) in members {
        a2.push(l, id);
    }
    Ok((a0, a1, a2))
}

/// Non-invariant members expected in the basis composed at `(f,f)_6`.
pub fn expected_b_size(n: usize) -> Option<usize> {
    match n {
        9 => Some(21),
        10 => Some(60),
        _ => None,
    }
}

/// The Diophantine step towards `A_3`: `A_2` on one side and the
/// non-invariant members of a covariant basis of `(f,f)_6` on the other.
#[derive(Clone, Debug)]
pub struct A3System {
    /// `A_2` followed by the composed basis members, in one program.
    pub family: Family,
    pub a_len: usize,
    /// Labels of the source basis entries behind the `B` members.
    pub b_sources: Vec<String>,
    pub system: DiophSystem,
}

impl A3System {
    pub fn a(&self) -> Family {
        self.family.subset(&(0..self.a_len).collect::<Vec<_>>())
    }

    pub fn b(&self) -> Family {
        self.family.subset(&(self.a_len..self.family.len()).collect::<Vec<_>>())
    }

    pub fn a_degrees(&self) -> Vec<usize> {
        (0..self.a_len).map(|i| self.family.bidegree(i).0).collect()
    }

    pub fn b_degrees(&self) -> Vec<usize> {
        (self.a_len..self.family.len()).map(|i| self.family.bidegree(i).0).collect()
    }
}

/// Builds the system for `n` in {9, 10} from the basis `b_basis` of the
/// forms of degree `2n - 12`, composed at `(f,f)_6`.
pub fn build_a3_system(n: usize, b_basis: &Catalog) -> Result<A3System> {
    let expected = expected_b_size(n).ok_or(GordanError::Unsupported { n, range: "n in {9, 10}" })?;
    if b_basis.n != 2 * n - 12 {
        return Err(GordanError::Unsupported { n: b_basis.n, range: "basis of degree 2n - 12" });
    }
    let kept: Vec<&CatalogEntry> = b_basis.entries.iter().filter(|e| b_basis.program.bidegree(e.node).1 > 0).collect();
    if kept.len() != expected {
        return Err(GordanError::BasisSize { got: kept.len(), expected });
    }
    let (_, _, mut family) = seed_families(n)?;
    let a_len = family.len();
    let f = family.program.leaf();
    let c3 = family.program.transvect(f, f, 6)?;
    let mut b_sources = Vec::new();
    for e in kept {
        let node = family.program.compose(&b_basis.program, e.node, c3)?;
        family.push(format!("B.{}", e.label), node);
        b_sources.push(e.label.clone());
    }
    let lhs1 = (0..a_len).map(|i| family.bidegree(i).1 as u64).collect();
    let lhs2 = (a_len..family.len()).map(|i| family.bidegree(i).1 as u64).collect();
    let system = DiophSystem::new(lhs1, lhs2).expect("positive orders");
    Ok(A3System { family, a_len, b_sources, system })
}

/// A monomial in the `B` members (index, exponent) whose multiples are
/// discarded from the `V` side of transvectants.
pub type Forbidden = Vec<(usize, u32)>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    #[default]
    Pending,
    Verified,
    /// Rank fell short of the target within the budget.
    Short,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedCell {
    pub d: usize,
    pub m: usize,
    /// Dimension of the quotient by the reduction invariants.
    pub target_dim: u64,
    pub springer_dim: u64,
    /// Transvectants of `A_3` landing in this cell after filtering.
    pub transvectants: u64,
    pub prime: u32,
    pub hsop_degrees: Vec<usize>,
    pub status: CellStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPlan {
    pub n: usize,
    /// Sorted by `target_dim`, then `(d, m)`.
    pub cells: Vec<PlannedCell>,
    pub transvectants: u64,
}

impl CellPlan {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn find(&self, d: usize, m: usize) -> Option<&PlannedCell> {
        self.cells.iter().find(|c| c.d == d && c.m == m)
    }

    pub fn largest(&self) -> Option<&PlannedCell> {
        self.cells.last()
    }
}

/// Degree sums of `count`-element multisets drawn from `degrees`, as a bitset.
fn multiset_sums(degrees: &[usize], count: u64, cap: usize) -> Vec<bool> {
    let mut cur = vec![false; cap + 1];
    cur[0] = true;
    for _ in 0..count {
        let mut next = vec![false; cap + 1];
        for (s, _) in cur.iter().enumerate().filter(|(_, &b)| b) {
            for &dg in degrees {
                if s + dg <= cap {
                    next[s + dg] = true;
                }
            }
        }
        cur = next;
    }
    cur
}

fn sumset(a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut out = vec![false; a.len()];
    for (i, _) in a.iter().enumerate().filter(|(_, &x)| x) {
        for (j, _) in b.iter().enumerate().filter(|(_, &y)| y) {
            if i + j < out.len() {
                out[i + j] = true;
            }
        }
    }
    out
}

/// Every `(d, m)` reached by a transvectant of `A_3` before any filtering:
/// the expansions of a companion solution differ only in how each grouped
/// count splits among members of equal order, which moves the degree.
pub fn unfiltered_cells(sys: &A3System, comp: &Companion, solutions: &[MinimalSolution]) -> BTreeSet<(usize, usize)> {
    let (ad, bd) = (sys.a_degrees(), sys.b_degrees());
    let group_degs = |groups: &[Vec<usize>], degs: &[usize]| -> Vec<Vec<usize>> {
        groups.iter().map(|g| g.iter().map(|&i| degs[i]).collect()).collect()
    };
    let (ga, gb) = (group_degs(&comp.groups1, &ad), group_degs(&comp.groups2, &bd));
    let cap = solutions
        .iter()
        .map(|s| {
            let a: usize = s.alpha.iter().zip(&ga).map(|(&c, g)| c as usize * g.iter().max().unwrap()).sum();
            let b: usize = s.beta.iter().zip(&gb).map(|(&c, g)| c as usize * g.iter().max().unwrap()).sum();
            a + b
        })
        .max()
        .unwrap_or(0);
    let mut cache: HashMap<(bool, usize, u64), Vec<bool>> = HashMap::new();
    let mut out = BTreeSet::new();
    for s in solutions {
        let mut acc = vec![false; cap + 1];
        acc[0] = true;
        for (side, counts, groups) in [(false, &s.alpha, &ga), (true, &s.beta, &gb)] {
            for (g, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
                let sums = cache.entry((side, g, c)).or_insert_with(|| multiset_sums(&groups[g], c, cap));
                acc = sumset(&acc, sums);
            }
        }
        let m = (s.u + s.v) as usize;
        for (d, _) in acc.iter().enumerate().filter(|(_, &x)| x) {
            out.insert((d, m));
        }
    }
    out
}

/// Settings for [`plan_cells`].
#[derive(Clone, Debug)]
pub struct PlanFilters<'a> {
    /// Degree bound per order; orders without an entry are dropped.
    pub bounds: Option<&'a BoundTable>,
    pub forbidden: &'a [Forbidden],
    pub prime: u32,
    pub hsop_degrees: Vec<usize>,
}

/// Calls `visit(d, m, beta)` for every expansion of every companion
/// solution whose degree stays within the bound for its order, `beta` being
/// the exponent vector over the `B` members.
pub fn for_each_transvectant<F>(
    sys: &A3System,
    comp: &Companion,
    solution: &MinimalSolution,
    bounds: Option<&BoundTable>,
    visit: &mut F,
) where
    F: FnMut(usize, usize, &[u64]),
{
    let (ad, bd) = (sys.a_degrees(), sys.b_degrees());
    let m = (solution.u + solution.v) as usize;
    let cap = match bounds {
        Some(b) => match b.max_degree(m) {
            Some(c) => c,
            None => return,
        },
        None => usize::MAX,
    };
    // The A side carries no filter: only its degrees and their
    // multiplicities matter.
    let mut a_degs: Vec<(usize, u64)> = vec![(0, 1)];
    for (g, members) in comp.groups1.iter().enumerate() {
        let mut next: HashMap<usize, u64> = HashMap::new();
        for_each_split(members.len(), solution.alpha[g], &mut |split: &[u64]| {
            let extra: usize = split.iter().zip(members).map(|(&c, &i)| c as usize * ad[i]).sum();
            for &(d, k) in &a_degs {
                if d + extra <= cap {
                    *next.entry(d + extra).or_default() += k;
                }
            }
        });
        a_degs = next.into_iter().collect();
    }
    let Some(min_a) = a_degs.iter().map(|&(d, _)| d).min() else { return };
    let mut walker =
        BWalker { groups: &comp.groups2, bd: &bd, cap: cap - min_a, beta: vec![0; bd.len()], target: &solution.beta };
    walker.walk(0, 0, solution.beta.first().copied().unwrap_or(0), 0, &mut |bdeg, beta| {
        for &(ad, k) in &a_degs {
            if ad + bdeg <= cap {
                for _ in 0..k {
                    visit(ad + bdeg, m, beta);
                }
            }
        }
    });
}

struct BWalker<'a> {
    groups: &'a [Vec<usize>],
    bd: &'a [usize],
    cap: usize,
    beta: Vec<u64>,
    target: &'a [u64],
}

impl BWalker<'_> {
    fn walk(&mut self, g: usize, k: usize, left: u64, deg: usize, leaf: &mut dyn FnMut(usize, &[u64])) {
        if deg > self.cap {
            return;
        }
        if g == self.groups.len() {
            leaf(deg, &self.beta);
            return;
        }
        let members = &self.groups[g];
        let i = members[k];
        if k + 1 == members.len() {
            let nd = deg + left as usize * self.bd[i];
            self.beta[i] = left;
            let next = self.target.get(g + 1).copied().unwrap_or(0);
            self.walk(g + 1, 0, next, nd, leaf);
            self.beta[i] = 0;
            return;
        }
        for c in 0..=left {
            let nd = deg + c as usize * self.bd[i];
            if nd > self.cap {
                break;
            }
            self.beta[i] = c;
            self.walk(g, k + 1, left - c, nd, leaf);
        }
        self.beta[i] = 0;
    }
}

/// The `V` monomials met by the bounded `A_3` transvectants, as a filter
/// on candidate relations. Keys are indices into the source basis.
#[derive(Clone, Debug, Default)]
pub struct VRelevance {
    max_power: HashMap<usize, u32>,
    /// Pareto-maximal exponent pairs per ordered key `(i, j)`, `i < j`.
    pairs: HashMap<(usize, usize), Vec<(u32, u32)>>,
}

impl VRelevance {
    pub fn from_plan(
        sys: &A3System,
        comp: &Companion,
        solutions: &[MinimalSolution],
        bounds: Option<&BoundTable>,
        source: &Catalog,
    ) -> Self {
        let to_source: Vec<usize> = sys
            .b_sources
            .iter()
            .map(|l| source.entries.iter().position(|e| &e.label == l).expect("source label"))
            .collect();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for s in solutions {
            for_each_transvectant(sys, comp, s, bounds, &mut |_, _, beta| {
                if !seen.contains(beta) {
                    seen.insert(beta.to_vec());
                }
            });
        }
        let mut out = VRelevance::default();
        let mut raw: HashMap<(usize, usize), HashSet<(u32, u32)>> = HashMap::new();
        for beta in &seen {
            let support: Vec<(usize, u32)> =
                beta.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (to_source[i], e as u32)).collect();
            for &(i, e) in &support {
                let slot = out.max_power.entry(i).or_default();
                *slot = (*slot).max(e);
            }
            for (k, &(i, a)) in support.iter().enumerate() {
                for &(j, b) in &support[k + 1..] {
                    let (key, val) = if i < j { ((i, j), (a, b)) } else { ((j, i), (b, a)) };
                    raw.entry(key).or_default().insert(val);
                }
            }
        }
        for (key, set) in raw {
            let v: Vec<(u32, u32)> = set.iter().copied().collect();
            let frontier = v
                .iter()
                .copied()
                .filter(|&(a, b)| !v.iter().any(|&(c, d)| (c, d) != (a, b) && c >= a && d >= b))
                .collect();
            out.pairs.insert(key, frontier);
        }
        out
    }
}

impl Relevance for VRelevance {
    fn power(&self, x: usize, e: u32) -> bool {
        self.max_power.get(&x).is_some_and(|&m| m >= e)
    }

    fn pair(&self, x: usize, a: u32, y: usize, b: u32) -> bool {
        let (key, (a, b)) = if x < y { ((x, y), (a, b)) } else { ((y, x), (b, a)) };
        self.pairs.get(&key).is_some_and(|f| f.iter().any(|&(c, d)| c >= a && d >= b))
    }
}

/// Whether the monomial with exponents `beta` is a multiple of `mono`.
pub fn divides(mono: &Forbidden, beta: &[u64]) -> bool {
    mono.iter().all(|&(i, e)| beta[i] >= e as u64)
}

/// Expands the companion solutions, keeps transvectants within the degree
/// and order bounds whose `V` side avoids every forbidden monomial, and
/// groups them by `(d, m)`.
pub fn plan_cells(
    sys: &A3System,
    comp: &Companion,
    solutions: &[MinimalSolution],
    filters: &PlanFilters<'_>,
) -> CellPlan {
    let counts: HashMap<(usize, usize), u64> = solutions
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<(usize, usize), u64>, s| {
            for_each_transvectant(sys, comp, s, filters.bounds, &mut |d, m, beta| {
                if !filters.forbidden.iter().any(|f| divides(f, beta)) {
                    *acc.entry((d, m)).or_default() += 1;
                }
            });
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let n = sys.family.n();
    let mut cells: Vec<PlannedCell> = counts
        .into_iter()
        .map(|((d, m), t)| PlannedCell {
            d,
            m,
            target_dim: quotient_dim_u64(n, d, m, &filters.hsop_degrees),
            springer_dim: springer_dim_u64(n, d, m),
            transvectants: t,
            prime: filters.prime,
            hsop_degrees: filters.hsop_degrees.clone(),
            status: CellStatus::Pending,
        })
        .collect();
    cells.sort_by_key(|c| (c.target_dim, c.d, c.m));
    let transvectants = cells.iter().map(|c| c.transvectants).sum();
    CellPlan { n, cells, transvectants }
}

/// Calls `f` on every way of writing `count` as an ordered sum of `parts`
/// nonnegative integers.
fn for_each_split(parts: usize, count: u64, f: &mut dyn FnMut(&[u64])) {
    fn rec(buf: &mut Vec<u64>, parts: usize, left: u64, f: &mut dyn FnMut(&[u64])) {
        if buf.len() + 1 == parts {
            buf.push(left);
            f(buf);
            buf.pop();
            return;
        }
        for c in 0..=left {
            buf.push(c);
            rec(buf, parts, left - c, f);
            buf.pop();
        }
    }
    rec(&mut Vec::with_capacity(parts), parts, count, f);
}


/// `A'_k`: members of `g` dominated in degree and order by some cell of
/// `cells`, followed by `extra` members (found missing during verification)
/// not already present.
pub fn reduce_family(cells: &[(usize, usize)], g: &Family, extra: &[usize]) -> Family {
    let mut keep: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let (d, m) = g.bidegree(i);
            cells.iter().any(|&(cd, cm)| d <= cd && m <= cm)
        })
        .collect();
    for &i in extra {
        if !keep.contains(&i) {
            keep.push(i);
        }
    }
    g.subset(&keep)
}

/// Settings of a catalog spanning check; stored in the ledger so that a
/// resumed run uses the same forms and seeds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n: usize,
    /// Cells with a larger target are skipped.
    pub max_dim: u64,
    /// Explicit cells; `None` means every cell holding a catalog generator.
    pub cells: Option<Vec<(usize, usize)>>,
    /// Work modulo the partial h.s.o.p. of the reduction spec.
    pub reduce: bool,
    pub prime: u32,
    pub seed: u64,
    pub budget_factor: usize,
}

impl VerifyConfig {
    pub fn new(n: usize, max_dim: u64) -> Self {
        VerifyConfig {
            n,
            max_dim,
            cells: None,
            reduce: true,
            prime: DEFAULT_PRIME,
            seed: 1,
            budget_factor: crate::rankcheck::BUDGET_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyLedger {
    pub config: VerifyConfig,
    pub plan: Vec<PlannedCell>,
    pub certificates: Vec<SpanCertificate>,
}

impl VerifyLedger {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| GordanError::Ledger(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GordanError::Ledger(e.to_string()))
    }

    /// Write through a temporary file so an interrupted run never leaves a
    /// truncated ledger.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| GordanError::Ledger(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| GordanError::Ledger(format!("{}: {e}", path.display())))
    }

    pub fn all_verified(&self) -> bool {
        self.plan.iter().all(|c| c.status == CellStatus::Verified)
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.plan.iter().filter(|c| c.status == status).count()
    }
}

/// Cells to check against the catalog of `Cov(S_n)`, smallest target first.
pub fn catalog_plan(catalog: &Catalog, config: &VerifyConfig) -> Result<Vec<PlannedCell>> {
    let n = config.n;
    let degrees = if config.reduce {
        reduction_spec(n).ok_or(GordanError::Unsupported { n, range: "n in {9, 10} with reductions" })?.degrees
    } else {
        Vec::new()
    };
    let cells: Vec<(usize, usize)> = match &config.cells {
        Some(c) => c.clone(),
        None => table_counts(catalog).counts.keys().copied().collect(),
    };
    let mut plan: Vec<PlannedCell> = cells
        .into_iter()
        .map(|(d, m)| PlannedCell {
            d,
            m,
            target_dim: quotient_dim_u64(n, d, m, &degrees),
            springer_dim: springer_dim_u64(n, d, m),
            transvectants: 0,
            prime: config.prime,
            hsop_degrees: degrees.clone(),
            status: CellStatus::Pending,
        })
        .filter(|c| c.target_dim <= config.max_dim)
        .collect();
    plan.sort_by_key(|c| (c.target_dim, c.d, c.m));
    Ok(plan)
}

/// Check that monomials in the catalog generators span every planned cell.
/// `resume` continues a previous ledger with the same configuration;
/// `progress` sees the ledger after each cell.
pub fn verify_catalog(
    catalog: &Catalog,
    config: &VerifyConfig,
    resume: Option<VerifyLedger>,
    progress: &mut dyn FnMut(&VerifyLedger) -> Result<()>,
) -> Result<VerifyLedger> {
    let mut ledger = match resume {
        Some(l) if &l.config == config => l,
        Some(_) => return Err(GordanError::Ledger("configuration differs from the ledger".into())),
        None => VerifyLedger { config: config.clone(), plan: catalog_plan(catalog, config)?, certificates: Vec::new() },
    };
    let pending: Vec<usize> =
        (0..ledger.plan.len()).filter(|&i| ledger.plan[i].status == CellStatus::Pending).collect();
    if pending.is_empty() {
        return Ok(ledger);
    }
    let family = catalog.family();
    let count =
        pending.iter().map(|&i| forms_needed(ledger.plan[i].target_dim as usize, ledger.plan[i].m)).max().unwrap_or(0);
    let pool = if config.reduce {
        let spec = reduction_spec(config.n).expect("checked by the plan");
        let zero: Vec<usize> = spec
            .catalog_labels
            .iter()
            .map(|l| family.position(l).ok_or_else(|| GordanError::Ledger(format!("catalog lacks {l}"))))
            .collect::<Result<_>>()?;
        FormPool::constrained(config.n, config.prime, &family.subset(&zero), count, config.seed)?
    } else {
        FormPool::generic(config.n, config.prime, count, config.seed)
    };
    let ev = EvaluatedFamily::new(&family, &pool)?;
    for i in pending {
        let (d, m, target) = (ledger.plan[i].d, ledger.plan[i].m, ledger.plan[i].target_dim as usize);
        let budget = config.budget_factor * target.max(1);
        let (cert, _) = verify_dimension(&ev, d, m, target, budget, cell_seed(config.seed, d, m), Sampling::Monomials)?;
        ledger.plan[i].status = if cert.complete { CellStatus::Verified } else { CellStatus::Short };
        ledger.certificates.push(cert);
        progress(&ledger)?;
    }
    Ok(ledger)
}
